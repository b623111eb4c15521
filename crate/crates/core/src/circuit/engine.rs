//! Sparse stage-by-stage propagation.

use crate::elements::apply_pair;
use crate::error::{Error, Result};
use crate::state::{AmplitudeMap, TwoPhotonState};

use super::{Circuit, CompiledStage};

fn input_on_space(circuit: &Circuit, input: &TwoPhotonState) -> Result<TwoPhotonState> {
    let space = circuit.space()?;
    if **input.space() == *space {
        Ok(input.clone())
    } else {
        input.rehome(&space).map_err(|_| Error::DimensionMismatch)
    }
}

fn run_stage(stage: &CompiledStage, state: &TwoPhotonState) -> Result<TwoPhotonState> {
    stage
        .ops
        .iter()
        .try_fold(state.clone(), |s, op| apply_pair(op, stage.photon, &s))
        .map_err(|e| Error::Stage {
            index: stage.number,
            kind: stage.label.clone(),
            source: Box::new(e),
        })
}

/// Runs `input` through every stage of `circuit`.
pub fn propagate(circuit: &Circuit, input: &TwoPhotonState) -> Result<TwoPhotonState> {
    let mut state = input_on_space(circuit, input)?;
    for stage in circuit.compile()? {
        state = run_stage(&stage, &state)?;
    }
    Ok(state)
}

/// Like [`propagate`], returning the state after every stage.
pub fn propagate_stages(
    circuit: &Circuit,
    input: &TwoPhotonState,
) -> Result<Vec<(CompiledStage, TwoPhotonState)>> {
    let mut state = input_on_space(circuit, input)?;
    let mut out = Vec::new();
    for stage in circuit.compile()? {
        state = run_stage(&stage, &state)?;
        out.push((stage, state.clone()));
    }
    Ok(out)
}
