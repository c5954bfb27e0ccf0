use super::*;
use crate::pipeline::demos::{overhead_swing, side_swing};
use crate::pipeline::samples::{crack_task, cut_task, desk_arm, hammer, knife};

#[test]
fn probe_full_pipeline() {
    let robot = desk_arm();
    let tool = hammer();
    let task = crack_task();
    let goal = GoalSpec {
        v_tool: [0.0, 0.0, -1.15],
        d_tool: Some(0.0),
        p_g: task.p_g,
    };

    let t0 = std::time::Instant::now();
    let ranked = rank_strategies(&robot, &tool, &task, &goal, 16, 7).unwrap();
    eprintln!("rank: {:.2?} for {} strategies", t0.elapsed(), ranked.len());
    for s in &ranked {
        let cost = s.solution.as_ref().map(|x| x.cost.total).unwrap_or(f64::NAN);
        eprintln!(
            "  {}/{}: valid={} cost={:.4} diag={:?}",
            s.affordance, s.functional, s.valid, cost, s.diagnostics
        );
    }

    let t1 = std::time::Instant::now();
    let demo = overhead_swing(task.p_g);
    let mimic = mimic_plan(&robot, &tool, &demo).unwrap();
    eprintln!(
        "mimic overhead: {:.2?} valid={} cost={:.4} diag={:?}",
        t1.elapsed(),
        mimic.valid,
        mimic.solution.as_ref().map(|x| x.cost.total).unwrap_or(f64::NAN),
        mimic.diagnostics
    );
    let demo2 = side_swing(task.p_g);
    let mimic2 = mimic_plan(&robot, &tool, &demo2).unwrap();
    eprintln!(
        "mimic side: valid={} cost={:.4} diag={:?}",
        mimic2.valid,
        mimic2.solution.as_ref().map(|x| x.cost.total).unwrap_or(f64::NAN),
        mimic2.diagnostics
    );

    let t2 = std::time::Instant::now();
    let base = baseline_plan(&robot, &tool, "grip_mid", "face_down", task.p_g).unwrap();
    eprintln!(
        "baseline: {:.2?} valid={} diag={:?}",
        t2.elapsed(),
        base.valid,
        base.diagnostics
    );

    let best = ranked.iter().find(|s| s.valid).expect("some valid strategy");
    let t3 = std::time::Instant::now();
    let (log, class, success) = evaluate_execution(best, &task, 3).unwrap();
    eprintln!(
        "evaluate best: {:.2?} class={:?} success={} rows={}",
        t3.elapsed(),
        class,
        success,
        log.records.len()
    );
    let (_, bclass, bsuccess) = evaluate_execution(&base, &task, 3).unwrap();
    eprintln!("evaluate baseline: class={:?} success={}", bclass, bsuccess);
}

#[test]
fn probe_cut_pipeline() {
    let robot = desk_arm();
    let tool = knife();
    let task = cut_task();
    let goal = GoalSpec {
        v_tool: [0.0, 0.0, -0.18],
        d_tool: Some(0.0),
        p_g: task.p_g,
    };
    let t0 = std::time::Instant::now();
    let ranked = rank_strategies(&robot, &tool, &task, &goal, 16, 7).unwrap();
    eprintln!("cut rank: {:.2?} for {} strategies", t0.elapsed(), ranked.len());
    for s in &ranked {
        let cost = s.solution.as_ref().map(|x| x.cost.total).unwrap_or(f64::NAN);
        eprintln!(
            "  {}/{}: valid={} cost={:.4} diag={:?}",
            s.affordance, s.functional, s.valid, cost, s.diagnostics
        );
    }
    let best = ranked.iter().find(|s| s.valid).expect("some valid strategy");
    let (_, class, success) = evaluate_execution(best, &task, 3).unwrap();
    eprintln!("evaluate cut best: class={:?} success={}", class, success);
}
#[test]
fn probe_side_pair() {
    let robot = desk_arm();
    let tool = hammer();
    let task = crack_task();
    let goal = GoalSpec {
        v_tool: [0.0, 0.0, -1.15],
        d_tool: Some(0.0),
        p_g: task.p_g,
    };
    let t0 = std::time::Instant::now();
    let s = plan_pair(&robot, &tool, "grip_end", "face_side", &goal, 7).unwrap();
    eprintln!(
        "grip_end/face_side: {:.1?} valid={} diag={:?}",
        t0.elapsed(),
        s.valid,
        s.diagnostics
    );
}
