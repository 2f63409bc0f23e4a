//! Laminate trees: constructive decompositions of hull points into convex
//! combinations along wave-cone directions, with leaves on `K`.
//!
//! The constructions by region:
//!
//! * `k = k_bound` (rigid region, and the outer endpoint of both cones):
//!   one split `((1+rho)/2) (1, a, a) + ((1-rho)/2) (-1, b, -b)` with
//!   `a = v + (1-rho) w`, `b = v - (1+rho) w`, `w = -(v2/|v|^2) v`.
//! * rim of the `v = 0` disc: the same split with `v = 0`,
//!   `w = m / (1 - rho^2)`.
//! * inside the disc: a flux chord through `e` to two rim points.
//! * cone tips (`k = +-1`): a split into a point of `K` and a point
//!   `(psi, 0, 0)` on the rim of the disc.
//! * interior `k` in a cone: a flux split between the tip state and the
//!   `k_bound` state at the same `(rho, v)`; their difference `(0, 0, c v)`
//!   lies in the wave cone.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::{classify, disc_radius, flux_ratio, k_bound, Region, RegionTag};
use crate::separators::firing_separators;
use crate::state::{
    add, in_wave_cone, k_residual, max_wave_cone_residual, norm, norm_sq, perp, scale, sub, State,
    ToleranceConfig, Vec2,
};

/// Distance from a cone endpoint below which the endpoint construction is
/// used directly.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Default number of equispaced samples on a wave-cone segment.
pub const SEGMENT_SAMPLES: usize = 33;

/// Construction used for a split, with its auxiliary values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// Split into `(1, a, a)` and `(-1, b, -b)` with shear vector `w`.
    FirstLaminate { w: Vec2 },
    /// Upper cone tip: `(1, v/lambda, v/lambda)` and `(psi, 0, 0)`.
    UpperTip { psi: f64 },
    /// Lower cone tip: `(-1, v/lambda, -v/lambda)` and `(psi, 0, 0)`.
    LowerTip { psi: f64 },
    /// Pure-flux split between `m = k_left v` and `m = k_right v`.
    FluxInterpolation { k_left: f64, k_right: f64 },
    /// Pure-flux chord of the `v = 0` disc through `e` along `direction`.
    DiscChord { e: Vec2, direction: Vec2 },
    /// Supplied externally; no construction recorded.
    #[default]
    Unspecified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaminateSplit {
    pub lambda: f64,
    pub rule: SplitRule,
    pub left: LaminateNode,
    pub right: LaminateNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WireNode", try_from = "WireNode")]
pub struct LaminateNode {
    pub point: State,
    pub split: Option<Box<LaminateSplit>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireNode {
    point: State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<SplitRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<Box<WireNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    right: Option<Box<WireNode>>,
}

impl From<LaminateNode> for WireNode {
    fn from(node: LaminateNode) -> Self {
        match node.split {
            None => WireNode {
                point: node.point,
                lambda: None,
                rule: None,
                left: None,
                right: None,
            },
            Some(split) => {
                let LaminateSplit {
                    lambda,
                    rule,
                    left,
                    right,
                } = *split;
                WireNode {
                    point: node.point,
                    lambda: Some(lambda),
                    rule: Some(rule),
                    left: Some(Box::new(left.into())),
                    right: Some(Box::new(right.into())),
                }
            }
        }
    }
}

impl TryFrom<WireNode> for LaminateNode {
    type Error = String;

    fn try_from(w: WireNode) -> std::result::Result<Self, String> {
        match (w.lambda, w.left, w.right) {
            (None, None, None) => Ok(LaminateNode::leaf(w.point)),
            (Some(lambda), Some(left), Some(right)) => Ok(LaminateNode {
                point: w.point,
                split: Some(Box::new(LaminateSplit {
                    lambda,
                    rule: w.rule.unwrap_or_default(),
                    left: LaminateNode::try_from(*left)?,
                    right: LaminateNode::try_from(*right)?,
                })),
            }),
            _ => Err("a split needs lambda, left and right together".into()),
        }
    }
}

impl LaminateNode {
    pub fn leaf(point: State) -> Self {
        Self { point, split: None }
    }

    pub fn split(point: State, lambda: f64, rule: SplitRule, left: Self, right: Self) -> Self {
        Self {
            point,
            split: Some(Box::new(LaminateSplit {
                lambda,
                rule,
                left,
                right,
            })),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Number of split levels; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        match &self.split {
            None => 0,
            Some(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<&State> {
        let mut out = Vec::new();
        self.visit(&mut |n| {
            if n.is_leaf() {
                out.push(&n.point)
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a LaminateNode)) {
        f(self);
        if let Some(s) = &self.split {
            s.left.visit(f);
            s.right.visit(f);
        }
    }

    /// Leaf points with their total weights in the root.
    pub fn leaf_weights(&self) -> Vec<(State, f64)> {
        fn walk(node: &LaminateNode, weight: f64, out: &mut Vec<(State, f64)>) {
            match &node.split {
                None => out.push((node.point, weight)),
                Some(s) => {
                    walk(&s.left, weight * s.lambda, out);
                    walk(&s.right, weight * (1.0 - s.lambda), out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 1.0, &mut out);
        out
    }
}

/// Bottom-up weighted combination of the leaves.
pub fn recombine(tree: &LaminateNode) -> Result<State> {
    match &tree.split {
        None => {
            if tree.point.is_finite() {
                Ok(tree.point)
            } else {
                Err(Error::MalformedTree("non-finite leaf".into()))
            }
        }
        Some(s) => {
            if !(0.0..=1.0).contains(&s.lambda) {
                return Err(Error::MalformedTree(format!(
                    "weight {} outside [0, 1]",
                    s.lambda
                )));
            }
            let left = recombine(&s.left)?;
            let right = recombine(&s.right)?;
            Ok(left.lerp(&right, s.lambda))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeReport {
    pub leaves_in_k: bool,
    pub max_leaf_residual: f64,
    pub splits_in_lambda: bool,
    pub max_split_residual: f64,
    pub weights_valid: bool,
    pub max_recombination_error: f64,
    pub depth: usize,
    pub leaf_count: usize,
    pub pass: bool,
}

/// Audits every node: leaves on `K`, split differences in the wave cone,
/// weights in `[0, 1]` and node-wise recombination, plus recombination of the
/// whole tree against the root.
pub fn verify_tree(tree: &LaminateNode, tol: &ToleranceConfig) -> TreeReport {
    let mut max_leaf: f64 = 0.0;
    let mut max_split: f64 = 0.0;
    let mut max_recomb: f64 = 0.0;
    let mut weights_valid = true;
    let mut leaf_count = 0;
    tree.visit(&mut |node| match &node.split {
        None => {
            leaf_count += 1;
            max_leaf = max_leaf.max(nan_to_inf(k_residual(&node.point)));
        }
        Some(s) => {
            weights_valid &= (0.0..=1.0).contains(&s.lambda);
            let diff = s.left.point - s.right.point;
            max_split = max_split.max(nan_to_inf(max_wave_cone_residual(&diff)));
            let combo = s.left.point.lerp(&s.right.point, s.lambda);
            max_recomb = max_recomb.max(nan_to_inf((combo - node.point).max_norm()));
        }
    });
    match recombine(tree) {
        Ok(z) => max_recomb = max_recomb.max(nan_to_inf((z - tree.point).max_norm())),
        Err(_) => max_recomb = f64::INFINITY,
    }
    let leaves_in_k = max_leaf <= tol.eq_tol;
    let splits_in_lambda = max_split <= tol.eq_tol;
    TreeReport {
        leaves_in_k,
        max_leaf_residual: max_leaf,
        splits_in_lambda,
        max_split_residual: max_split,
        weights_valid,
        max_recombination_error: max_recomb,
        depth: tree.depth(),
        leaf_count,
        pass: leaves_in_k && splits_in_lambda && weights_valid && max_recomb <= tol.eq_tol,
    }
}

fn nan_to_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

/// Builds a laminate tree for a hull point.
pub fn decompose(z: &State, tol: &ToleranceConfig) -> Result<LaminateNode> {
    let region = classify(z, tol);
    decompose_classified(z, &region, tol)
}

/// As [`decompose`], reusing an existing classification of `z`.
pub fn decompose_classified(
    z: &State,
    region: &Region,
    tol: &ToleranceConfig,
) -> Result<LaminateNode> {
    match region.tag {
        RegionTag::Outside => Err(Error::OutsideHull {
            region: *region,
            separators: firing_separators(z, tol),
        }),
        RegionTag::OnK => Ok(LaminateNode::leaf(*z)),
        RegionTag::X1 => disc_tree(z, region.e.expect("X1 carries e"), tol),
        RegionTag::X3 => first_laminate(z, tol),
        RegionTag::X2 => cone_tree(z, ConeEnd::Upper, tol),
        RegionTag::X4 => cone_tree(z, ConeEnd::Lower, tol),
    }
}

fn unavailable(msg: impl Into<String>) -> Error {
    Error::TreeUnavailable(msg.into())
}

fn check_weight(lambda: f64, what: &str) -> Result<f64> {
    if lambda.is_finite() && (0.0..=1.0).contains(&lambda) {
        Ok(lambda)
    } else {
        Err(unavailable(format!("{what}: weight {lambda} outside [0, 1]")))
    }
}

/// Splits `(rho, v, rho v + (1 - rho^2) w)` into its two `K` states.
fn density_split(z: &State, w: Vec2) -> Result<LaminateNode> {
    let rho = z.rho;
    let lambda = check_weight(0.5 * (1.0 + rho), "first laminate")?;
    let a = add(z.v, scale(1.0 - rho, w));
    let b = sub(z.v, scale(1.0 + rho, w));
    Ok(LaminateNode::split(
        *z,
        lambda,
        SplitRule::FirstLaminate { w },
        LaminateNode::leaf(State::on_k(1.0, a)),
        LaminateNode::leaf(State::on_k(-1.0, b)),
    ))
}

/// One split for `m = k_bound v`, `v != 0`.
fn first_laminate(z: &State, _tol: &ToleranceConfig) -> Result<LaminateNode> {
    let w = scale(-z.v[1] / norm_sq(z.v), z.v);
    density_split(z, w)
}

/// Decomposition of a point of the `v = 0` disc.
fn disc_tree(z: &State, e: Vec2, tol: &ToleranceConfig) -> Result<LaminateNode> {
    let c = disc_radius(z.rho);
    if c <= tol.eq_tol {
        // Degenerate disc: only (rho, 0, 0) with |rho| within tolerance of 1.
        return Err(unavailable("disc radius below tolerance"));
    }
    let r = norm(e);
    if 1.0 - r <= tol.eq_tol {
        return rim_split(z);
    }
    let direction = if r > 1e-3 {
        scale(1.0 / r, perp(e))
    } else {
        [1.0, 0.0]
    };
    let h = (1.0 - r * r).sqrt();
    let step = scale(c * h, direction);
    let upper = State::new(z.rho, z.v, add(z.m, step));
    let lower = State::new(z.rho, z.v, sub(z.m, step));
    Ok(LaminateNode::split(
        *z,
        0.5,
        SplitRule::DiscChord { e, direction },
        rim_split(&upper)?,
        rim_split(&lower)?,
    ))
}

/// Split of a rim point of the disc; `w` is taken from `m` directly.
fn rim_split(z: &State) -> Result<LaminateNode> {
    let w = scale(1.0 / (1.0 - z.rho * z.rho), sub(z.m, scale(z.rho, z.v)));
    density_split(z, w)
}

#[derive(Clone, Copy)]
enum ConeEnd {
    Upper,
    Lower,
}

impl ConeEnd {
    fn sign(self) -> f64 {
        match self {
            ConeEnd::Upper => 1.0,
            ConeEnd::Lower => -1.0,
        }
    }
}

fn cone_tree(z: &State, end: ConeEnd, tol: &ToleranceConfig) -> Result<LaminateNode> {
    let s = end.sign();
    let k = flux_ratio(z);
    let bound = k_bound(z.rho, z.v);
    // distances from the two endpoints, measured into the interval
    let from_bound = s * (bound - k);
    let from_tip = s * (k - s);
    if from_bound <= ENDPOINT_TOL {
        return first_laminate(z, tol);
    }
    if from_tip <= ENDPOINT_TOL {
        return tip_tree(z, end, tol);
    }
    // z = lambda (rho, v, s v) + (1 - lambda) (rho, v, k_bound v)
    let lambda = check_weight((bound - k) / (bound - s), "flux interpolation")?;
    let tip = State::new(z.rho, z.v, scale(s, z.v));
    let outer = State::new(z.rho, z.v, scale(bound, z.v));
    Ok(LaminateNode::split(
        *z,
        lambda,
        SplitRule::FluxInterpolation {
            k_left: s,
            k_right: bound,
        },
        tip_tree(&tip, end, tol)?,
        first_laminate(&outer, tol)?,
    ))
}

/// `(rho, v, s v) = lambda (s, v/lambda, v/lambda) + (1 - lambda) (psi, 0, 0)`.
fn tip_tree(z: &State, end: ConeEnd, tol: &ToleranceConfig) -> Result<LaminateNode> {
    let s = end.sign();
    let v = z.v;
    let v2 = v[1];
    let vv = norm_sq(v);
    if v2.abs() <= tol.eq_tol * vv.sqrt() {
        return Err(unavailable("cone tip with horizontal velocity"));
    }
    let lambda = check_weight(vv / (vv - s * (1.0 - s * z.rho) * v2), "cone tip")?;
    let psi = (vv + z.rho * v2) / v2;
    if !(psi.abs() <= 1.0 + tol.eq_tol) {
        return Err(unavailable(format!("cone tip: density {psi} outside [-1, 1]")));
    }
    let leaf = State::on_k(s, scale(1.0 / lambda, v));
    let remainder = State::new(psi, [0.0, 0.0], [0.0, 0.0]);
    let remainder_tree = if (psi.abs() - 1.0).abs() <= tol.eq_tol {
        LaminateNode::leaf(remainder)
    } else {
        density_split(&remainder, [0.0, 0.0])?
    };
    let rule = match end {
        ConeEnd::Upper => SplitRule::UpperTip { psi },
        ConeEnd::Lower => SplitRule::LowerTip { psi },
    };
    Ok(LaminateNode::split(
        *z,
        lambda,
        rule,
        LaminateNode::leaf(leaf),
        remainder_tree,
    ))
}

/// `samples` equispaced convex combinations `lambda z1 + (1 - lambda) z2`,
/// from `lambda = 0` to `lambda = 1`.
pub fn lambda_segment(
    z1: &State,
    z2: &State,
    samples: usize,
    tol: &ToleranceConfig,
) -> Result<Vec<State>> {
    let diff = *z1 - *z2;
    if !in_wave_cone(&diff, tol) {
        return Err(Error::NotInWaveCone {
            residual: max_wave_cone_residual(&diff),
        });
    }
    Ok(match samples {
        0 => vec![],
        1 => vec![z1.lerp(z2, 0.5)],
        n => (0..n)
            .map(|i| z1.lerp(z2, i as f64 / (n - 1) as f64))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::in_k;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn close(a: &State, b: &State) -> bool {
        (*a - *b).max_norm() <= 1e-14
    }

    #[test]
    fn rigid_example() {
        let z = State::new(0.0, [1.0, 0.0], [0.0, 0.0]);
        let tree = decompose(&z, &tol()).unwrap();
        let s = tree.split.as_ref().unwrap();
        assert_eq!(s.lambda, 0.5);
        assert!(close(&s.left.point, &State::new(1.0, [1.0, 0.0], [1.0, 0.0])));
        assert!(close(&s.right.point, &State::new(-1.0, [1.0, 0.0], [-1.0, 0.0])));
        let diff = s.left.point - s.right.point;
        assert!(close(&diff, &State::new(2.0, [0.0, 0.0], [2.0, 0.0])));
        assert!(verify_tree(&tree, &tol()).pass);
        assert!(close(&recombine(&tree).unwrap(), &z));
    }

    #[test]
    fn upper_tip_example() {
        let z = State::new(0.0, [0.0, -0.5], [0.0, -0.5]);
        let tree = decompose(&z, &tol()).unwrap();
        let s = tree.split.as_ref().unwrap();
        assert!((s.lambda - 1.0 / 3.0).abs() < 1e-15);
        assert!(close(&s.left.point, &State::new(1.0, [0.0, -1.5], [0.0, -1.5])));
        assert!(close(&s.right.point, &State::new(-0.5, [0.0, 0.0], [0.0, 0.0])));
        let inner = s.right.split.as_ref().unwrap();
        assert!((inner.lambda - 0.25).abs() < 1e-15);
        assert!(close(&inner.left.point, &State::new(1.0, [0.0, 0.0], [0.0, 0.0])));
        assert!(close(&inner.right.point, &State::new(-1.0, [0.0, 0.0], [0.0, 0.0])));
        let report = verify_tree(&tree, &tol());
        assert!(report.pass, "{report:?}");
        assert_eq!(report.depth, 2);
    }

    #[test]
    fn disc_interior_example() {
        let z = State::new(0.0, [0.0, 0.0], [0.0, -0.5]);
        let tree = decompose(&z, &tol()).unwrap();
        let s = tree.split.as_ref().unwrap();
        assert_eq!(s.lambda, 0.5);
        assert!(close(&s.left.point, &State::new(0.0, [0.0, 0.0], [0.5, -0.5])));
        assert!(close(&s.right.point, &State::new(0.0, [0.0, 0.0], [-0.5, -0.5])));
        let diff = s.left.point - s.right.point;
        assert!(close(&diff, &State::new(0.0, [0.0, 0.0], [1.0, 0.0])));
        for (child, w) in [(&s.left, [0.5, -0.5]), (&s.right, [-0.5, -0.5])] {
            let c = child.split.as_ref().unwrap();
            assert_eq!(c.lambda, 0.5);
            assert!(close(&c.left.point, &State::new(1.0, w, w)));
            assert!(close(&c.right.point, &State::new(-1.0, scale(-1.0, w), w)));
        }
        assert!(verify_tree(&tree, &tol()).pass);
        assert!(close(&recombine(&tree).unwrap(), &z));
    }

    #[test]
    fn interior_cone_points_have_depth_three() {
        let z = State::new(0.0, [0.0, -0.5], [0.0, -0.75]);
        let tree = decompose(&z, &tol()).unwrap();
        let report = verify_tree(&tree, &tol());
        assert!(report.pass, "{report:?}");
        assert_eq!(report.depth, 3);
        let z = State::new(0.2, [0.1, 0.4], [-0.1 * 1.7, -0.4 * 1.7]);
        assert_eq!(classify(&z, &tol()).tag, RegionTag::X4);
        let report = verify_tree(&decompose(&z, &tol()).unwrap(), &tol());
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn leaf_and_outside() {
        let z = State::new(1.0, [2.0, 3.0], [2.0, 3.0]);
        let tree = decompose(&z, &tol()).unwrap();
        assert!(tree.is_leaf());
        assert_eq!(recombine(&tree).unwrap(), z);
        let out = decompose(&State::new(0.0, [1.0, 0.0], [0.0, 1.0]), &tol());
        match out {
            Err(Error::OutsideHull { separators, .. }) => assert!(separators.contains(&"G2".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn verify_detects_tampering() {
        let z = State::new(0.0, [1.0, 0.0], [0.0, 0.0]);
        let tree = decompose(&z, &tol()).unwrap();

        let mut bad_leaf = tree.clone();
        bad_leaf.split.as_mut().unwrap().left.point.rho = 0.9;
        let r = verify_tree(&bad_leaf, &tol());
        assert!(!r.leaves_in_k && !r.pass);

        let mut bad_weight = tree.clone();
        bad_weight.split.as_mut().unwrap().lambda += 0.1;
        let r = verify_tree(&bad_weight, &tol());
        assert!(r.max_recombination_error > 1e-3 && !r.pass);
    }

    #[test]
    fn tree_json_round_trip() {
        let z = State::new(0.0, [0.0, -0.5], [0.0, -0.75]);
        let tree = decompose(&z, &tol()).unwrap();
        let json = serde_json::to_string(&tree).unwrap();
        let back: LaminateNode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tree);
        let leaf: LaminateNode =
            serde_json::from_str(r#"{"point":{"rho":1,"v":[0,0],"m":[0,0]}}"#).unwrap();
        assert!(leaf.is_leaf());
        let partial = r#"{"point":{"rho":1,"v":[0,0],"m":[0,0]},"lambda":0.5}"#;
        assert!(serde_json::from_str::<LaminateNode>(partial).is_err());
    }

    #[test]
    fn segment_examples() {
        let z = State::new(0.0, [1.0, 0.0], [0.0, 0.0]);
        let seg = lambda_segment(&z, &z, SEGMENT_SAMPLES, &tol()).unwrap();
        assert_eq!(seg.len(), 33);
        assert!(seg.iter().all(|p| *p == z));

        let a = State::new(1.0, [1.0, 0.0], [1.0, 0.0]);
        let b = State::new(-1.0, [1.0, 0.0], [-1.0, 0.0]);
        let seg = lambda_segment(&a, &b, SEGMENT_SAMPLES, &tol()).unwrap();
        assert!(seg.iter().all(|p| classify(p, &tol()).tag.in_hull()));
        assert!(in_k(&seg[0], &tol()) && in_k(&seg[32], &tol()));

        let c = State::new(0.0, [1.0, 0.5], [0.0, 0.0]);
        assert!(lambda_segment(&a, &c, 5, &tol()).is_err());
    }
}
