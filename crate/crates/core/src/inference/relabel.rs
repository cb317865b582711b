//! Post-hoc ordering constraint against label switching.
//!
//! States are ordered by their mixture mean, components within a state by
//! location. With shared weights, a single component order (that of the first
//! state) is applied to every state so the shared simplex stays shared.

use crate::error::Result;
use crate::hmm::HmmModel;
use crate::mixture::MixtureEmission;

use super::chains::PosteriorDraws;
use super::transform::{from_flat, to_flat};

fn sorted_order(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    idx
}

fn permute_components(e: &MixtureEmission, order: &[usize]) -> MixtureEmission {
    MixtureEmission {
        weights: order.iter().map(|&c| e.weights[c]).collect(),
        components: order.iter().map(|&c| e.components[c]).collect(),
    }
}

/// Reorders states and components of one model.
pub fn relabel_model(m: &HmmModel, shared_weights: bool) -> Result<HmmModel> {
    let common = shared_weights.then(|| {
        let xs: Vec<f64> = m.emissions()[0].components.iter().map(|c| c.xi).collect();
        sorted_order(&xs)
    });
    let emissions: Vec<MixtureEmission> = m
        .emissions()
        .iter()
        .map(|e| {
            let order = common.clone().unwrap_or_else(|| {
                sorted_order(&e.components.iter().map(|c| c.xi).collect::<Vec<_>>())
            });
            permute_components(e, &order)
        })
        .collect();
    let means: Vec<f64> = emissions.iter().map(MixtureEmission::mean).collect();
    let sorted = HmmModel::new(m.transition().clone(), m.initial().to_vec(), emissions)?;
    Ok(sorted.permute_states(&sorted_order(&means)))
}

/// Applies [`relabel_model`] to every draw.
pub fn relabel(draws: &PosteriorDraws) -> Result<PosteriorDraws> {
    let shape = draws.shape;
    let mut out = draws.clone();
    for chain in &mut out.chains {
        for d in &mut chain.draws {
            *d = to_flat(&relabel_model(&from_flat(d, shape)?, shape.shared_weights)?);
        }
    }
    out.relabeled = true;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{forward_log_likelihood, ObservedSeries};
    use crate::skewnormal::SkewNormalParams;
    use ndarray::array;

    fn model() -> HmmModel {
        let sn = |xi, w| SkewNormalParams::new(xi, w, 0.5).unwrap();
        HmmModel::new(
            array![[0.7, 0.3], [0.2, 0.8]],
            vec![0.6, 0.4],
            vec![
                MixtureEmission::new(vec![0.3, 0.7], vec![sn(4.0, 1.0), sn(6.0, 0.5)]).unwrap(),
                MixtureEmission::new(vec![0.5, 0.5], vec![sn(0.0, 1.0), sn(-1.0, 2.0)]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn orders_states_and_components() {
        let r = relabel_model(&model(), false).unwrap();
        let e = r.emissions();
        assert!(e[0].mean() < e[1].mean());
        assert_eq!(e[0].components[0].xi, -1.0);
        assert_eq!(e[1].components[1].xi, 6.0);
        assert_eq!(r.transition(), &array![[0.8, 0.2], [0.3, 0.7]]);
        assert_eq!(r.initial(), &[0.4, 0.6]);
    }

    #[test]
    fn idempotent_and_likelihood_preserving() {
        let once = relabel_model(&model(), false).unwrap();
        assert_eq!(relabel_model(&once, false).unwrap(), once);
        let y = ObservedSeries::new(vec![0.1, 4.2, 5.9, -0.7, 2.0]).unwrap();
        let a = forward_log_likelihood(&model(), &y);
        let b = forward_log_likelihood(&once, &y);
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn shared_weights_use_one_component_order() {
        let r = relabel_model(&model(), true).unwrap();
        // first state's order [4, 6] is already ascending, so components stay put
        let hi = &r.emissions()[1];
        assert_eq!(hi.components[0].xi, 4.0);
        let lo = &r.emissions()[0];
        assert_eq!(lo.components[0].xi, 0.0);
    }
}
