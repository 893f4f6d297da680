#include "hifm/model.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "hifm/energy.hpp"
#include "hifm/error.hpp"
#include "hifm/parallel.hpp"
#include "hifm/random.hpp"

namespace hifm {

namespace {

constexpr char kModelMagic[] = "HIFM-MLP";
constexpr std::uint32_t kModelVersion = 1;
constexpr std::size_t kGradChunk = 16;

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

Vector make_input(std::span<const double> y, double z, std::size_t dim) {
  if (y.size() != dim) {
    throw ValidationError("mlp: input has " + std::to_string(y.size()) + " components, expected " + std::to_string(dim));
  }
  Vector x(dim + 1);
  for (std::size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(y[i])) throw ValidationError("mlp: non-finite input component " + std::to_string(i));
    x[i] = y[i];
  }
  if (!std::isfinite(z)) throw ValidationError("mlp: non-finite interpolant input");
  x[dim] = z;
  return x;
}

FieldValue split_output(Vector out) {
  FieldValue fv;
  fv.v_z = out.back();
  out.pop_back();
  fv.v_y = std::move(out);
  return fv;
}

void project_vy(Vector& v, const ModeTransform& mode, const SymMatrix* hyp) {
  if (mode.project) {
    if (hyp == nullptr) throw ValidationError("mode transform: projection requested without a projector");
    v = matvec(hyp->matrix(), v);
  }
  if (mode.spatial_dim > 0) zero_com_project_inplace(v, mode.spatial_dim);
}

// Adds the loss of one sample and its gradient w.r.t. model outputs.
double sample_loss(const Mlp& model, const TrainSample& s, const ModeTransform& mode, Vector* g_out, bool* clamped,
                   const Mlp::Trace* tr) {
  const std::size_t n = model.dim();
  const Vector& out = tr->post.back();
  const std::span<const double> vy_model(out.data(), n);
  const TransformedField mt = apply_mode_transform(vy_model, out[n], mode, s.hyp_projector, kMinModelVz);
  const TransformedField tt = apply_mode_transform(s.target_vy, s.target_vz, mode, s.hyp_projector, 0.0);
  *clamped = mt.clamped;

  Vector r(n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = mt.v_y[i] - tt.v_y[i];
    loss += r[i] * r[i];
  }
  const double rz = mt.v_z - tt.v_z;
  loss += rz * rz;
  if (g_out == nullptr) return loss;

  // dL/du for u = v_y (or v_y / d): the projections are symmetric and r lies in their range.
  Vector du(n);
  for (std::size_t i = 0; i < n; ++i) du[i] = 2.0 * r[i];
  project_vy(du, mode, s.hyp_projector);

  g_out->assign(n + 1, 0.0);
  if (mode.finite) {
    double dd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      (*g_out)[i] = du[i] / mt.denom;
      dd -= du[i] * vy_model[i] / (mt.denom * mt.denom);
    }
    (*g_out)[n] = mt.clamped ? 0.0 : dd;
  } else {
    for (std::size_t i = 0; i < n; ++i) (*g_out)[i] = du[i];
    (*g_out)[n] = 2.0 * rz;
  }
  return loss;
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ValidationError("mlp: need at least input and output widths");
  if (widths_.front() < 2 || widths_.front() != widths_.back()) {
    throw ValidationError("mlp: input and output widths must both equal dim + 1");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l + 1] == 0) throw ValidationError("mlp: zero layer width");
    layers_.push_back({widths_[l + 1], widths_[l], offset});
    offset += widths_[l + 1] * (widths_[l] + 1);
  }
  params_.assign(offset, 0.0);
}

Mlp Mlp::zeros(const std::vector<std::size_t>& widths) { return Mlp(widths); }

Mlp Mlp::init(const std::vector<std::size_t>& widths, std::uint64_t seed) {
  Mlp net(widths);
  Rng rng(seed);
  for (const auto& layer : net.layers_) {
    const double sd = std::sqrt(2.0 / static_cast<double>(layer.rows + layer.cols));
    for (std::size_t k = 0; k < layer.weight_count(); ++k) net.params_[layer.offset + k] = sd * standard_normal(rng);
  }
  return net;
}

double Mlp::weight(std::size_t l, std::size_t r, std::size_t c) const {
  return params_[layers_.at(l).offset + r * layers_[l].cols + c];
}
double& Mlp::weight(std::size_t l, std::size_t r, std::size_t c) {
  return params_[layers_.at(l).offset + r * layers_[l].cols + c];
}
double Mlp::bias(std::size_t l, std::size_t r) const { return params_[layers_.at(l).bias_offset() + r]; }
double& Mlp::bias(std::size_t l, std::size_t r) { return params_[layers_.at(l).bias_offset() + r]; }

Mlp::Trace Mlp::trace(std::span<const double> y, double z) const {
  Trace tr;
  tr.post.push_back(make_input(y, z, dim()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& L = layers_[l];
    const double* w = params_.data() + L.offset;
    const double* b = params_.data() + L.bias_offset();
    const Vector& h = tr.post.back();
    Vector a(L.rows);
    for (std::size_t r = 0; r < L.rows; ++r) {
      double s = b[r];
      const double* wr = w + r * L.cols;
      for (std::size_t c = 0; c < L.cols; ++c) s += wr[c] * h[c];
      a[r] = s;
    }
    Vector act = a;
    if (l + 1 < layers_.size())
      for (double& v : act) v = softplus(v);
    tr.pre.push_back(std::move(a));
    tr.post.push_back(std::move(act));
  }
  return tr;
}

FieldValue Mlp::forward(std::span<const double> y, double z) const {
  Trace tr = trace(y, z);
  return split_output(std::move(tr.post.back()));
}

FieldValue Mlp::jvp(std::span<const double> y, double z, std::span<const double> tangent) const {
  if (tangent.size() != dim() + 1) throw ValidationError("mlp jvp: tangent must have dim + 1 components");
  Vector h = make_input(y, z, dim());
  Vector dh(tangent.begin(), tangent.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerShape& L = layers_[l];
    const double* w = params_.data() + L.offset;
    const double* b = params_.data() + L.bias_offset();
    Vector a(L.rows), da(L.rows);
    for (std::size_t r = 0; r < L.rows; ++r) {
      double s = b[r], ds = 0.0;
      const double* wr = w + r * L.cols;
      for (std::size_t c = 0; c < L.cols; ++c) {
        s += wr[c] * h[c];
        ds += wr[c] * dh[c];
      }
      a[r] = s;
      da[r] = ds;
    }
    if (l + 1 < layers_.size()) {
      for (std::size_t r = 0; r < L.rows; ++r) {
        da[r] *= sigmoid(a[r]);
        a[r] = softplus(a[r]);
      }
    }
    h = std::move(a);
    dh = std::move(da);
  }
  return split_output(std::move(dh));
}

void Mlp::backward(const Trace& tr, std::span<const double> g_out, std::span<double> grad) const {
  Vector delta(g_out.begin(), g_out.end());
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const LayerShape& L = layers_[l];
    const double* w = params_.data() + L.offset;
    double* gw = grad.data() + L.offset;
    double* gb = grad.data() + L.bias_offset();
    const Vector& h = tr.post[l];
    for (std::size_t r = 0; r < L.rows; ++r) {
      const double d = delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      double* gwr = gw + r * L.cols;
      for (std::size_t c = 0; c < L.cols; ++c) gwr[c] += d * h[c];
    }
    if (l == 0) break;
    Vector prev(L.cols, 0.0);
    for (std::size_t r = 0; r < L.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* wr = w + r * L.cols;
      for (std::size_t c = 0; c < L.cols; ++c) prev[c] += wr[c] * d;
    }
    const Vector& a_prev = tr.pre[l - 1];
    for (std::size_t c = 0; c < L.cols; ++c) prev[c] *= sigmoid(a_prev[c]);
    delta = std::move(prev);
  }
}

TransformedField apply_mode_transform(std::span<const double> v_y, double v_z, const ModeTransform& mode,
                                      const SymMatrix* hyp_projector, double min_abs_vz) {
  TransformedField out;
  out.v_y.assign(v_y.begin(), v_y.end());
  out.v_z = v_z;
  if (mode.finite) {
    double d = v_z;
    if (std::abs(d) < min_abs_vz) {
      d = d < 0.0 ? -min_abs_vz : min_abs_vz;
      out.clamped = true;
    }
    for (double& v : out.v_y) v /= d;
    out.denom = d;
    out.v_z = 1.0;
  }
  project_vy(out.v_y, mode, hyp_projector);
  return out;
}

LossGrad loss_and_grad(const Mlp& model, std::span<const TrainSample> batch, const ModeTransform& mode) {
  if (batch.empty()) throw ValidationError("loss_and_grad: empty batch");
  const std::size_t chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
  struct Partial {
    double loss = 0.0;
    double weight = 0.0;
    std::size_t clamps = 0;
    Vector grad;
  };
  std::vector<Partial> partial(chunks);
  parallel_for(chunks, [&](std::size_t ci) {
    Partial& p = partial[ci];
    p.grad.assign(model.parameters().size(), 0.0);
    const std::size_t end = std::min(batch.size(), (ci + 1) * kGradChunk);
    Vector g_out;
    for (std::size_t i = ci * kGradChunk; i < end; ++i) {
      const TrainSample& s = batch[i];
      const Mlp::Trace tr = model.trace(s.y, s.z);
      bool clamped = false;
      p.loss += s.weight * sample_loss(model, s, mode, &g_out, &clamped, &tr);
      for (double& g : g_out) g *= s.weight;
      model.backward(tr, g_out, p.grad);
      p.weight += s.weight;
      p.clamps += clamped ? 1 : 0;
    }
  });

  LossGrad out;
  out.grad.assign(model.parameters().size(), 0.0);
  double total_weight = 0.0;
  for (const Partial& p : partial) {
    out.loss += p.loss;
    total_weight += p.weight;
    out.clamp_count += p.clamps;
    for (std::size_t k = 0; k < out.grad.size(); ++k) out.grad[k] += p.grad[k];
  }
  if (!(total_weight > 0.0)) throw ValidationError("loss_and_grad: sample weights must sum to a positive value");
  out.loss /= total_weight;
  for (double& g : out.grad) g /= total_weight;
  return out;
}

double batch_loss(const Mlp& model, std::span<const TrainSample> batch, const ModeTransform& mode) {
  if (batch.empty()) throw ValidationError("batch_loss: empty batch");
  double loss = 0.0, weight = 0.0;
  for (const TrainSample& s : batch) {
    const Mlp::Trace tr = model.trace(s.y, s.z);
    bool clamped = false;
    loss += s.weight * sample_loss(model, s, mode, nullptr, &clamped, &tr);
    weight += s.weight;
  }
  return loss / weight;
}

AdamWState adamw_init(std::size_t parameter_count, AdamWConfig hp) {
  return AdamWState{hp, 0, Vector(parameter_count, 0.0), Vector(parameter_count, 0.0)};
}

void adamw_step(AdamWState& st, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || st.m.size() != params.size() || st.v.size() != params.size()) {
    throw ValidationError("adamw_step: parameter/gradient/state sizes differ");
  }
  ++st.step;
  const auto& hp = st.hp;
  const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    st.m[k] = hp.beta1 * st.m[k] + (1.0 - hp.beta1) * grads[k];
    st.v[k] = hp.beta2 * st.v[k] + (1.0 - hp.beta2) * grads[k] * grads[k];
    const double m_hat = st.m[k] / bc1;
    const double v_hat = st.v[k] / bc2;
    params[k] -= hp.lr * (m_hat / (std::sqrt(v_hat) + hp.eps) + hp.weight_decay * params[k]);
  }
}

void save_model(const Mlp& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError("cannot open model file for writing: " + path.string());
  os.write(kModelMagic, 8);
  io::write_le<std::uint32_t>(os, kModelVersion);
  io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& L : model.layers()) {
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(L.rows));
    io::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(L.cols));
  }
  for (double p : model.parameters()) io::write_f64(os, p);
  if (!os) throw FormatError("failed writing model file: " + path.string());
}

Mlp load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open model file: " + path.string());
  io::expect_magic(is, kModelMagic, "model");
  const auto version = io::read_le<std::uint32_t>(is, "model version");
  if (version != kModelVersion) {
    throw FormatError("unsupported model file version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelVersion) + ")");
  }
  const auto count = io::read_le<std::uint32_t>(is, "layer count");
  if (count == 0) throw FormatError("model file has no layers");
  std::vector<std::size_t> widths;
  for (std::uint32_t l = 0; l < count; ++l) {
    const auto rows = io::read_le<std::uint32_t>(is, "layer rows");
    const auto cols = io::read_le<std::uint32_t>(is, "layer cols");
    if (l == 0) widths.push_back(cols);
    if (cols != widths.back()) throw FormatError("model file: layer " + std::to_string(l) + " shape mismatch");
    widths.push_back(rows);
  }
  Mlp net;
  try {
    net = Mlp::zeros(widths);
  } catch (const ValidationError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  for (double& p : net.parameters()) p = io::read_f64(is, "parameters");
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("model file has trailing bytes");
  return net;
}

}  // namespace hifm
