use super::{heuristic_lower_bound, queries_value, Models, Run, SearchConfig, SearchResult};
use crate::error::Result;
use crate::model::{Bay, Move};

/// Depth-first search visiting children in descending policy probability.
pub fn dlts_dfs(root: &Bay, models: Models<'_>, config: &SearchConfig) -> Result<SearchResult> {
    let mut run = Run::new(root, models, config)?;
    let mut bay = root.clone();
    let mut path = Vec::new();
    visit(&mut run, &mut bay, &mut path)?;
    Ok(run.finish())
}

fn visit(run: &mut Run<'_>, bay: &mut Bay, path: &mut Vec<Move>) -> Result<()> {
    run.nodes += 1;
    let cost = path.len();
    if run.out_of_time() {
        return Ok(());
    }
    if bay.is_sorted() {
        run.offer(|| path.clone(), cost);
        return Ok(());
    }
    if cost >= run.ub {
        return Ok(());
    }
    let prediction = if queries_value(cost, run.config.k) {
        run.predict(bay)?
    } else {
        None
    };
    if heuristic_lower_bound(cost, prediction, run.config.d) >= run.ub as f64 {
        return Ok(());
    }
    let (branches, _) = run.branches(bay, cost, path.last().copied())?;
    for (mv, _) in branches {
        if run.timed_out {
            break;
        }
        bay.move_unchecked(mv);
        path.push(mv);
        let res = visit(run, bay, path);
        path.pop();
        bay.move_unchecked(mv.inverse());
        res?;
    }
    Ok(())
}
