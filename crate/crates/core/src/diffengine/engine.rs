use super::{Jet2, Lin, MAX_DIRS};
use crate::basis::LocalBasis;
use crate::error::{Error, Result};
use crate::network::{silu_derivs, BasisFamily, KanLayer, KanModel, ParamBlock, ParamSet, PointSet};

/// Which input derivatives the forward pass carries.
///
/// Direction `k` seeds input axis `axes[k]` with slope `scale[k]`, so that
/// derivatives come out with respect to a coordinate `y_k` related to the
/// network input by `x = scale * y + const` along that axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetSpec {
    dirs: usize,
    axes: [usize; MAX_DIRS],
    scale: [f64; MAX_DIRS],
}

impl JetSpec {
    /// Values only.
    pub fn values() -> Self {
        Self {
            dirs: 0,
            axes: [0; MAX_DIRS],
            scale: [0.0; MAX_DIRS],
        }
    }

    /// First and second derivatives along the given axes.
    pub fn along(axes: &[usize], scale: &[f64]) -> Result<Self> {
        if axes.len() > MAX_DIRS || axes.len() != scale.len() {
            return Err(Error::InvalidArgument(format!(
                "need at most {MAX_DIRS} directions with one scale each, got {} axes and {} scales",
                axes.len(),
                scale.len()
            )));
        }
        let mut spec = Self::values();
        spec.dirs = axes.len();
        spec.axes[..axes.len()].copy_from_slice(axes);
        spec.scale[..axes.len()].copy_from_slice(scale);
        Ok(spec)
    }

    /// First and second derivatives along every axis `0..scale.len()`.
    pub fn all_axes(scale: &[f64]) -> Result<Self> {
        let axes: Vec<usize> = (0..scale.len()).collect();
        Self::along(&axes, scale)
    }

    pub fn dirs(&self) -> usize {
        self.dirs
    }

    pub fn axis(&self, k: usize) -> usize {
        self.axes[k]
    }
}

/// Values and directional jets of every node at one network level, or the
/// adjoints of those quantities during the reverse pass.
///
/// For node `j` and direction `k`, `d1(j, k)` and `d2(j, k)` are the first
/// and second derivatives along that direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetState {
    dirs: usize,
    v: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Network outputs with their input derivatives.
pub type NetJet = JetState;
/// Sensitivities of a point loss with respect to a [`NetJet`].
pub type NetJetAdjoint = JetState;

impl JetState {
    fn new(nodes: usize, dirs: usize) -> Self {
        Self {
            dirs,
            v: vec![0.0; nodes],
            a: vec![0.0; nodes * dirs],
            b: vec![0.0; nodes * dirs],
        }
    }

    fn zero(&mut self) {
        self.v.fill(0.0);
        self.a.fill(0.0);
        self.b.fill(0.0);
    }

    pub fn dirs(&self) -> usize {
        self.dirs
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.v[j]
    }

    pub fn d1(&self, j: usize, k: usize) -> f64 {
        self.a[j * self.dirs + k]
    }

    pub fn d2(&self, j: usize, k: usize) -> f64 {
        self.b[j * self.dirs + k]
    }

    pub fn jet(&self, j: usize, k: usize) -> Jet2 {
        Jet2::new(self.value(j), self.d1(j, k), self.d2(j, k))
    }

    pub fn value_mut(&mut self, j: usize) -> &mut f64 {
        &mut self.v[j]
    }

    pub fn d1_mut(&mut self, j: usize, k: usize) -> &mut f64 {
        &mut self.a[j * self.dirs + k]
    }

    pub fn d2_mut(&mut self, j: usize, k: usize) -> &mut f64 {
        &mut self.b[j * self.dirs + k]
    }

    fn check_dir(&self, k: usize) -> Result<()> {
        if k < self.dirs {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "derivative along direction {k} (only {} directions are tracked)",
                self.dirs
            )))
        }
    }

    /// Output `j` as a [`Lin`] component.
    pub fn lin_value(&self, j: usize) -> Lin {
        Lin::component(self.value(j), 0)
    }

    pub fn lin_d1(&self, j: usize, k: usize) -> Result<Lin> {
        self.check_dir(k)?;
        Ok(Lin::component(self.d1(j, k), 1 + k))
    }

    pub fn lin_d2(&self, j: usize, k: usize) -> Result<Lin> {
        self.check_dir(k)?;
        Ok(Lin::component(self.d2(j, k), 1 + MAX_DIRS + k))
    }

    /// Mixed second derivatives are not propagated.
    pub fn lin_mixed(&self, j: usize, k: usize, l: usize) -> Result<Lin> {
        if k == l {
            return self.lin_d2(j, k);
        }
        Err(Error::Unsupported(format!(
            "mixed partial derivative along directions {k} and {l}"
        )))
    }

    /// Adds `weight * dq/d(component)` for every component of output `j`
    /// that `q` depends on.
    pub fn add_lin(&mut self, j: usize, weight: f64, q: &Lin) {
        self.v[j] += weight * q.grad[0];
        for k in 0..self.dirs {
            self.a[j * self.dirs + k] += weight * q.grad[1 + k];
            self.b[j * self.dirs + k] += weight * q.grad[1 + MAX_DIRS + k];
        }
    }
}

#[derive(Debug, Clone, Default)]
struct LayerTape {
    sig: Vec<[f64; 4]>,
    basis: Vec<LocalBasis>,
    phi: Vec<[f64; 4]>,
    s: Vec<[f64; 4]>,
}

/// Reusable workspace for per-point forward jets and reverse adjoints.
#[derive(Debug, Clone)]
pub struct JetEngine<'m> {
    model: &'m KanModel,
    spec: JetSpec,
    orders: usize,
    states: Vec<JetState>,
    adjoints: Vec<JetState>,
    tapes: Vec<LayerTape>,
}

fn check_family(model: &KanModel, spec: &JetSpec) -> Result<()> {
    if let BasisFamily::Spline { k } = model.family() {
        if spec.dirs > 0 && k < 2 {
            return Err(Error::InvalidArgument(format!(
                "second input derivatives need spline degree k >= 2, model has k = {k}"
            )));
        }
    }
    if let Some(&axis) = spec.axes[..spec.dirs].iter().find(|&&a| a >= model.input_dim()) {
        return Err(Error::InvalidArgument(format!(
            "derivative axis {axis} out of range for {}-dimensional input",
            model.input_dim()
        )));
    }
    Ok(())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'m> JetEngine<'m> {
    /// `gradients` requests the extra basis derivative order the reverse
    /// pass needs.
    pub fn new(model: &'m KanModel, spec: JetSpec, gradients: bool) -> Result<Self> {
        check_family(model, &spec)?;
        let d = spec.dirs;
        let orders = if d > 0 { 2 } else { 0 } + usize::from(gradients);
        let states = model.shape().iter().map(|&n| JetState::new(n, d)).collect();
        let adjoints = model.shape().iter().map(|&n| JetState::new(n, d)).collect();
        let tapes = model
            .layers()
            .iter()
            .map(|l| LayerTape {
                sig: vec![[0.0; 4]; l.n_in()],
                basis: vec![LocalBasis::default(); l.n_in()],
                phi: vec![[0.0; 4]; l.params.edges()],
                s: vec![[0.0; 4]; l.params.edges()],
            })
            .collect();
        Ok(Self {
            model,
            spec,
            orders,
            states,
            adjoints,
            tapes,
        })
    }

    pub fn spec(&self) -> &JetSpec {
        &self.spec
    }

    /// Propagates jets of the input `x` through the network.
    pub fn forward(&mut self, x: &[f64]) -> &NetJet {
        assert_eq!(x.len(), self.model.input_dim(), "input dimension mismatch");
        let d = self.spec.dirs;
        let s0 = &mut self.states[0];
        s0.v.copy_from_slice(x);
        s0.a.fill(0.0);
        s0.b.fill(0.0);
        for k in 0..d {
            s0.a[self.spec.axes[k] * d + k] = self.spec.scale[k];
        }
        for (l, layer) in self.model.layers().iter().enumerate() {
            let (lo, hi) = self.states.split_at_mut(l + 1);
            let (inp, out, tape) = (&lo[l], &mut hi[0], &mut self.tapes[l]);
            match d {
                0 => forward_layer::<0>(layer, inp, out, tape, self.orders),
                1 => forward_layer::<1>(layer, inp, out, tape, self.orders),
                2 => forward_layer::<2>(layer, inp, out, tape, self.orders),
                3 => forward_layer::<3>(layer, inp, out, tape, self.orders),
                _ => forward_layer::<MAX_DIRS>(layer, inp, out, tape, self.orders),
            }
        }
        self.output()
    }

    pub fn output(&self) -> &NetJet {
        &self.states[self.states.len() - 1]
    }

    /// The latest forward output together with a zeroed adjoint to fill.
    pub fn output_and_seed(&mut self) -> (&NetJet, &mut NetJetAdjoint) {
        let last = self.states.len() - 1;
        let seed = &mut self.adjoints[last];
        seed.zero();
        (&self.states[last], seed)
    }

    /// Adds the parameter gradient of the seeded adjoint (at the latest
    /// forward point) into `grads`.
    pub fn backward(&mut self, grads: &mut ParamSet) {
        let d = self.spec.dirs;
        let n = self.model.layers().len();
        for l in (0..n).rev() {
            let layer = &self.model.layers()[l];
            let (lo, hi) = self.adjoints.split_at_mut(l + 1);
            let adj_in = if l > 0 {
                lo[l].zero();
                Some(&mut lo[l])
            } else {
                None
            };
            let (inp, adj_out, tape, g) = (&self.states[l], &hi[0], &self.tapes[l], &mut grads.layers[l]);
            match d {
                0 => backward_layer::<0>(layer, inp, adj_out, adj_in, tape, g),
                1 => backward_layer::<1>(layer, inp, adj_out, adj_in, tape, g),
                2 => backward_layer::<2>(layer, inp, adj_out, adj_in, tape, g),
                3 => backward_layer::<3>(layer, inp, adj_out, adj_in, tape, g),
                _ => backward_layer::<MAX_DIRS>(layer, inp, adj_out, adj_in, tape, g),
            }
        }
    }
}

#[inline(always)]
fn dirs<const D: usize>(v: &[f64], node: usize) -> &[f64; D] {
    v[node * D..node * D + D].try_into().expect("jet block of D entries")
}

#[inline(always)]
fn dirs_mut<const D: usize>(v: &mut [f64], node: usize) -> &mut [f64; D] {
    (&mut v[node * D..node * D + D]).try_into().expect("jet block of D entries")
}

#[inline(always)]
fn basis_sums(c: &[f64], loc: &LocalBasis, orders: usize) -> [f64; 4] {
    let mut s = [0.0; 4];
    for (o, so) in s.iter_mut().enumerate().take(orders + 1) {
        *so = dot(c, loc.order(o));
    }
    s
}

fn forward_layer<const D: usize>(layer: &KanLayer, inp: &JetState, out: &mut JetState, tape: &mut LayerTape, orders: usize) {
    let p = &layer.params;
    let n_in = p.n_in;
    let nb = p.n_basis;
    out.zero();
    for (i, node) in layer.nodes().iter().enumerate() {
        let x = inp.v[i];
        tape.sig[i] = silu_derivs(x);
        node.eval_local(x, orders, &mut tape.basis[i]);
    }
    for j in 0..p.n_out {
        let mut v = 0.0;
        let mut oa = [0.0; D];
        let mut ob = [0.0; D];
        for i in 0..n_in {
            let e = j * n_in + i;
            let loc = &tape.basis[i];
            let off = e * nb + loc.start;
            let s = basis_sums(&p.coeffs[off..off + loc.len()], loc, orders);
            let (cr, cb) = (p.res_w[e], p.basis_w[e]);
            let sg = tape.sig[i];
            let phi = [
                cr * sg[0] + cb * s[0],
                cr * sg[1] + cb * s[1],
                cr * sg[2] + cb * s[2],
                cr * sg[3] + cb * s[3],
            ];
            tape.phi[e] = phi;
            tape.s[e] = s;
            v += phi[0];
            let ai = dirs::<D>(&inp.a, i);
            let bi = dirs::<D>(&inp.b, i);
            for k in 0..D {
                oa[k] += phi[1] * ai[k];
                ob[k] += phi[2] * ai[k] * ai[k] + phi[1] * bi[k];
            }
        }
        out.v[j] = v;
        *dirs_mut::<D>(&mut out.a, j) = oa;
        *dirs_mut::<D>(&mut out.b, j) = ob;
    }
}

// Edge (j, i) feeds out_v += phi, out_a += phi' a_i, out_b += phi'' a_i^2 + phi' b_i.
// With w0, w1, w2 the sensitivities to phi, phi', phi'' the parameter and
// input adjoints follow by the chain rule.
fn backward_layer<const D: usize>(
    layer: &KanLayer,
    inp: &JetState,
    adj_out: &JetState,
    mut adj_in: Option<&mut JetState>,
    tape: &LayerTape,
    g: &mut ParamBlock,
) {
    let p = &layer.params;
    let n_in = p.n_in;
    let nb = p.n_basis;
    for j in 0..p.n_out {
        let w0 = adj_out.v[j];
        let abar = *dirs::<D>(&adj_out.a, j);
        let bbar = *dirs::<D>(&adj_out.b, j);
        for i in 0..n_in {
            let e = j * n_in + i;
            let ai = dirs::<D>(&inp.a, i);
            let bi = dirs::<D>(&inp.b, i);
            let mut w1 = 0.0;
            let mut w2 = 0.0;
            for k in 0..D {
                w1 += abar[k] * ai[k] + bbar[k] * bi[k];
                w2 += bbar[k] * ai[k] * ai[k];
            }
            if D == 0 && w0 == 0.0 {
                continue;
            }
            let sg = tape.sig[i];
            let s = tape.s[e];
            let phi = tape.phi[e];
            g.res_w[e] += w0 * sg[0] + w1 * sg[1] + w2 * sg[2];
            g.basis_w[e] += w0 * s[0] + w1 * s[1] + w2 * s[2];
            let cb = p.basis_w[e];
            let loc = &tape.basis[i];
            let off = e * nb + loc.start;
            let gc = &mut g.coeffs[off..off + loc.len()];
            if D == 0 {
                for (gm, b0) in gc.iter_mut().zip(&loc.d0) {
                    *gm += cb * w0 * b0;
                }
            } else {
                let (u0, u1, u2) = (cb * w0, cb * w1, cb * w2);
                for (((gm, b0), b1), b2) in gc.iter_mut().zip(&loc.d0).zip(&loc.d1).zip(&loc.d2) {
                    *gm += u0 * b0 + u1 * b1 + u2 * b2;
                }
            }
            if let Some(adj) = adj_in.as_deref_mut() {
                adj.v[i] += w0 * phi[1] + w1 * phi[2] + w2 * phi[3];
                let aa = dirs_mut::<D>(&mut adj.a, i);
                for k in 0..D {
                    aa[k] += abar[k] * phi[1] + 2.0 * bbar[k] * phi[2] * ai[k];
                }
                let ab = dirs_mut::<D>(&mut adj.b, i);
                for k in 0..D {
                    ab[k] += bbar[k] * phi[1];
                }
            }
        }
    }
}

fn check_grads(model: &KanModel, grads: &ParamSet) -> Result<()> {
    let ok = grads.layers.len() == model.layers().len()
        && grads
            .layers
            .iter()
            .zip(model.param_blocks())
            .all(|(g, p)| g.same_layout(p));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidShape(
            "gradient buffer does not match the model's parameter layout".into(),
        ))
    }
}

/// Sums `point_loss` over `points` and adds its parameter gradient into
/// `grads`.
///
/// For every point the closure receives the point index, the network
/// outputs with the input derivatives requested by `spec`, and a zeroed
/// adjoint into which it writes `dL_i / d(output component)`. It returns
/// the point's loss contribution. Points are processed in order, so the
/// accumulated sums are reproducible.
pub fn accumulate_loss_gradient<F>(
    model: &KanModel,
    points: &PointSet,
    spec: JetSpec,
    grads: &mut ParamSet,
    mut point_loss: F,
) -> Result<f64>
where
    F: FnMut(usize, &NetJet, &mut NetJetAdjoint) -> Result<f64>,
{
    if points.dim() != model.input_dim() {
        return Err(Error::InvalidShape(format!(
            "model expects {}-dimensional inputs, got {}",
            model.input_dim(),
            points.dim()
        )));
    }
    check_grads(model, grads)?;
    let mut engine = JetEngine::new(model, spec, true)?;
    let mut total = 0.0;
    for (i, x) in points.iter().enumerate() {
        engine.forward(x);
        let (jet, seed) = engine.output_and_seed();
        total += point_loss(i, jet, seed)?;
        engine.backward(grads);
    }
    Ok(total)
}

/// Loss value and its gradient with respect to every model parameter.
/// See [`accumulate_loss_gradient`].
pub fn loss_gradient<F>(model: &KanModel, points: &PointSet, spec: JetSpec, point_loss: F) -> Result<(f64, ParamSet)>
where
    F: FnMut(usize, &NetJet, &mut NetJetAdjoint) -> Result<f64>,
{
    let mut grads = model.params().zeros_like();
    let loss = accumulate_loss_gradient(model, points, spec, &mut grads, point_loss)?;
    Ok((loss, grads))
}

/// Network outputs and input jets at every point, without gradients.
pub fn eval_jets(model: &KanModel, points: &PointSet, spec: JetSpec) -> Result<Vec<NetJet>> {
    if points.dim() != model.input_dim() {
        return Err(Error::InvalidShape(format!(
            "model expects {}-dimensional inputs, got {}",
            model.input_dim(),
            points.dim()
        )));
    }
    let mut engine = JetEngine::new(model, spec, false)?;
    Ok(points.iter().map(|x| engine.forward(x).clone()).collect())
}

/// Output 0 with its first and second derivatives along one input axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputDerivs {
    pub u: f64,
    pub du: f64,
    pub d2u: f64,
    /// The second derivative is only piecewise defined (R basis): it jumps
    /// where an input crosses a bump end point.
    pub piecewise_second: bool,
}

pub fn eval_with_input_derivs(model: &KanModel, x: &[f64], dir: usize) -> Result<InputDerivs> {
    if x.len() != model.input_dim() {
        return Err(Error::InvalidShape(format!(
            "model expects {}-dimensional inputs, got {}",
            model.input_dim(),
            x.len()
        )));
    }
    if let Some(index) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index,
            value: x[index],
        });
    }
    let spec = JetSpec::along(&[dir], &[1.0])?;
    let mut engine = JetEngine::new(model, spec, false)?;
    let out = engine.forward(x);
    Ok(InputDerivs {
        u: out.value(0),
        du: out.d1(0, 0),
        d2u: out.d2(0, 0),
        piecewise_second: matches!(model.family(), BasisFamily::ReluR { .. }),
    })
}
