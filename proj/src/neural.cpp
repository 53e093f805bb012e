#include "iscc/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "iscc/rng.hpp"
#include "json.hpp"

namespace iscc {

using nlohmann::json;

ParamLayout make_layout(const GnnArch& arch) {
  if (arch.d_v < 1 || arch.h < 1 || arch.L < 1 || arch.d_e < 0)
    throw ValidationError("gnn arch dimensions must be positive");
  ParamLayout layout;
  layout.arch = arch;
  std::size_t off = 0;
  auto add = [&](const std::string& name, int rows, int cols) {
    layout.tensors.push_back({name, rows, cols, off});
    off += static_cast<std::size_t>(rows) * cols;
  };
  for (int l = 0; l < arch.L; ++l) {
    const int d = l == 0 ? arch.d_v : arch.h;
    const std::string suffix = std::to_string(l);
    add("msg1_W" + suffix, arch.h, d + arch.d_e);
    add("msg1_b" + suffix, arch.h, 1);
    add("msg2_W" + suffix, arch.h, arch.h);
    add("msg2_b" + suffix, arch.h, 1);
    add("upd1_W" + suffix, arch.h, d + arch.h);
    add("upd1_b" + suffix, arch.h, 1);
    add("upd2_W" + suffix, arch.h, arch.h);
    add("upd2_b" + suffix, arch.h, 1);
  }
  add("policy_W", 1, arch.h);
  add("policy_b", 1, 1);
  add("value_W", 1, arch.h);
  add("value_b", 1, 1);
  layout.total = off;
  return layout;
}

const ParamLayout& PolicyParams::layout() const {
  thread_local ParamLayout cached;
  thread_local bool valid = false;
  if (!valid || !(cached.arch == arch)) {
    cached = make_layout(arch);
    valid = true;
  }
  return cached;
}

PolicyParams init_params(const GnnArch& arch, std::uint64_t seed) {
  const ParamLayout layout = make_layout(arch);
  PolicyParams p;
  p.arch = arch;
  p.values.resize(layout.total);
  Rng rng(seed);
  for (const TensorSpec& t : layout.tensors) {
    const double a = std::sqrt(6.0 / (t.rows + t.cols));
    for (int i = 0; i < t.rows * t.cols; ++i)
      p.values[t.offset + i] = uniform_range(rng, -a, a);
  }
  return p;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t stamp_of(const PolicyParams& params, const EmploymentGraph& g) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, params.values.data(), params.values.size() * sizeof(double));
  const std::size_t v = g.vertex_count();
  h = fnv1a(h, &v, sizeof(v));
  for (const auto& f : g.vertex_features)
    h = fnv1a(h, f.data(), f.size() * sizeof(double));
  for (const auto& e : g.edges) {
    h = fnv1a(h, &e.a, sizeof(e.a));
    h = fnv1a(h, &e.b, sizeof(e.b));
    h = fnv1a(h, &e.feature, sizeof(e.feature));
  }
  return h;
}

struct Neighbor {
  int u = 0;
  double feature = 0.0;
};

std::vector<std::vector<Neighbor>> adjacency(const EmploymentGraph& g) {
  std::vector<std::vector<Neighbor>> nbrs(g.vertex_count());
  for (const auto& e : g.edges) {
    if (e.a < 0 || e.b < 0 || e.a >= static_cast<int>(g.vertex_count()) ||
        e.b >= static_cast<int>(g.vertex_count()))
      throw ShapeError("edge endpoint out of range");
    nbrs[e.a].push_back({e.b, e.feature});
    nbrs[e.b].push_back({e.a, e.feature});
  }
  for (auto& list : nbrs)
    std::sort(list.begin(), list.end(),
              [](const Neighbor& x, const Neighbor& y) { return x.u < y.u; });
  return nbrs;
}

// y = W x + b over flat storage, row-major W.
void affine(const double* W, const double* b, const double* x, int rows, int cols,
            double* y) {
  for (int r = 0; r < rows; ++r) {
    double acc = b[r];
    const double* row = W + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void tanh_inplace(double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] = std::tanh(y[i]);
}

}  // namespace

ForwardResult gnn_forward(const PolicyParams& params, const EmploymentGraph& graph) {
  const GnnArch& arch = params.arch;
  const ParamLayout& layout = params.layout();
  if (params.values.size() != layout.total)
    throw ShapeError("param vector does not match layout");
  const int V = static_cast<int>(graph.vertex_count());
  for (const auto& f : graph.vertex_features)
    if (static_cast<int>(f.size()) != arch.d_v)
      throw ShapeError("vertex feature dim " + std::to_string(f.size()) + ", arch expects " +
                       std::to_string(arch.d_v));

  const auto nbrs = adjacency(graph);
  const int h = arch.h;
  auto tensor = [&](int idx) { return params.values.data() + layout.tensors[idx].offset; };

  ForwardResult out;
  ForwardCache& cache = out.cache;
  cache.states.resize(arch.L + 1);
  cache.states[0] = graph.vertex_features;
  cache.layers.resize(arch.L);

  std::vector<double> x, tmp;
  for (int l = 0; l < arch.L; ++l) {
    const int d = l == 0 ? arch.d_v : h;
    const int base = l * 8;
    const double* Wm1 = tensor(base + 0);
    const double* bm1 = tensor(base + 1);
    const double* Wm2 = tensor(base + 2);
    const double* bm2 = tensor(base + 3);
    const double* Wu1 = tensor(base + 4);
    const double* bu1 = tensor(base + 5);
    const double* Wu2 = tensor(base + 6);
    const double* bu2 = tensor(base + 7);

    auto& layer = cache.layers[l];
    layer.msg_hidden.resize(V);
    layer.msg_out.resize(V);
    layer.agg.assign(V, std::vector<double>(h, 0.0));
    layer.upd_hidden.resize(V);
    cache.states[l + 1].assign(V, std::vector<double>(h, 0.0));

    for (int v = 0; v < V; ++v) {
      const auto& in = nbrs[v];
      layer.msg_hidden[v].resize(in.size());
      layer.msg_out[v].resize(in.size());
      auto& agg = layer.agg[v];
      for (std::size_t i = 0; i < in.size(); ++i) {
        x.assign(cache.states[l][in[i].u].begin(), cache.states[l][in[i].u].end());
        x.push_back(in[i].feature);
        auto& mh = layer.msg_hidden[v][i];
        mh.resize(h);
        affine(Wm1, bm1, x.data(), h, d + arch.d_e, mh.data());
        tanh_inplace(mh.data(), h);
        auto& mo = layer.msg_out[v][i];
        mo.resize(h);
        affine(Wm2, bm2, mh.data(), h, h, mo.data());
        tanh_inplace(mo.data(), h);
        for (int k = 0; k < h; ++k) agg[k] += mo[k];
      }
      if (!in.empty())
        for (int k = 0; k < h; ++k) agg[k] /= static_cast<double>(in.size());

      x.assign(cache.states[l][v].begin(), cache.states[l][v].end());
      x.insert(x.end(), agg.begin(), agg.end());
      auto& uh = layer.upd_hidden[v];
      uh.resize(h);
      affine(Wu1, bu1, x.data(), h, d + h, uh.data());
      tanh_inplace(uh.data(), h);
      auto& s = cache.states[l + 1][v];
      affine(Wu2, bu2, uh.data(), h, h, s.data());
      tanh_inplace(s.data(), h);
    }
  }

  const double* Wp = tensor(arch.L * 8 + 0);
  const double* bp = tensor(arch.L * 8 + 1);
  const double* Wv = tensor(arch.L * 8 + 2);
  const double* bv = tensor(arch.L * 8 + 3);

  out.scores.resize(V);
  cache.pooled.assign(h, 0.0);
  for (int v = 0; v < V; ++v) {
    const auto& s = cache.states[arch.L][v];
    double acc = bp[0];
    for (int k = 0; k < h; ++k) acc += Wp[k] * s[k];
    out.scores[v] = acc;
    for (int k = 0; k < h; ++k) cache.pooled[k] += s[k];
  }
  if (V > 0)
    for (int k = 0; k < h; ++k) cache.pooled[k] /= static_cast<double>(V);
  double value = bv[0];
  for (int k = 0; k < h; ++k) value += Wv[k] * cache.pooled[k];
  out.value = value;
  cache.stamp = stamp_of(params, graph);
  return out;
}

std::vector<double> policy_distribution(const std::vector<double>& scores,
                                        const std::vector<bool>& mask, bool require_choice) {
  if (scores.size() != mask.size())
    throw ShapeError("mask size does not match score count");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) best = std::max(best, scores[i]);
  if (best == -std::numeric_limits<double>::infinity()) {
    if (require_choice) throw FeasibilityError("every action is masked out");
    return {};
  }
  std::vector<double> pi(scores.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!mask[i]) continue;
    pi[i] = std::exp(scores[i] - best);
    z += pi[i];
  }
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) pi[i] /= z;
  return pi;
}

Grads backward(const PolicyParams& params, const EmploymentGraph& graph,
               const ForwardResult& forward, const LossSpec& spec) {
  const GnnArch& arch = params.arch;
  const ParamLayout& layout = params.layout();
  const ForwardCache& cache = forward.cache;
  if (cache.stamp != stamp_of(params, graph))
    throw ConsistencyError("forward cache does not match params + graph");
  const int V = static_cast<int>(graph.vertex_count());
  if (spec.action < 0 || spec.action >= V || spec.mask.size() != static_cast<std::size_t>(V) ||
      !spec.mask[spec.action])
    throw ConsistencyError("loss spec action is not a feasible vertex");

  const auto pi = policy_distribution(forward.scores, spec.mask, true);
  double entropy = 0.0;
  for (int i = 0; i < V; ++i)
    if (spec.mask[i] && pi[i] > 0.0) entropy -= pi[i] * std::log(pi[i]);
  const double value_err = forward.value - spec.return_target;

  Grads g;
  g.entropy = entropy;
  g.loss = -spec.advantage * std::log(pi[spec.action]) - spec.entropy_weight * entropy +
           spec.value_weight * value_err * value_err;
  g.values.assign(layout.total, 0.0);

  // d loss / d score and d loss / d value
  std::vector<double> dscore(V, 0.0);
  for (int i = 0; i < V; ++i) {
    if (!spec.mask[i]) continue;
    const double indicator = i == spec.action ? 1.0 : 0.0;
    dscore[i] = spec.advantage * (pi[i] - indicator);
    if (pi[i] > 0.0)
      dscore[i] += spec.entropy_weight * pi[i] * (std::log(pi[i]) + entropy);
  }
  const double dvalue = 2.0 * spec.value_weight * value_err;

  const auto nbrs = adjacency(graph);
  const int h = arch.h;
  auto tensor = [&](int idx) { return params.values.data() + layout.tensors[idx].offset; };
  auto grad = [&](int idx) { return g.values.data() + layout.tensors[idx].offset; };

  const double* Wp = tensor(arch.L * 8 + 0);
  const double* Wv = tensor(arch.L * 8 + 2);
  double* gWp = grad(arch.L * 8 + 0);
  double* gbp = grad(arch.L * 8 + 1);
  double* gWv = grad(arch.L * 8 + 2);
  double* gbv = grad(arch.L * 8 + 3);

  std::vector<std::vector<double>> dstate(V, std::vector<double>(h, 0.0));
  for (int v = 0; v < V; ++v) {
    const auto& s = cache.states[arch.L][v];
    for (int k = 0; k < h; ++k) {
      gWp[k] += dscore[v] * s[k];
      dstate[v][k] += dscore[v] * Wp[k];
    }
    gbp[0] += dscore[v];
  }
  gbv[0] += dvalue;
  for (int k = 0; k < h; ++k) gWv[k] += dvalue * cache.pooled[k];
  if (V > 0) {
    const double inv = 1.0 / static_cast<double>(V);
    for (int v = 0; v < V; ++v)
      for (int k = 0; k < h; ++k) dstate[v][k] += dvalue * Wv[k] * inv;
  }

  std::vector<double> x, dz(h), duh(h), dz1(h), dx, dmo(h), dmz2(h), dmh(h), dmz1(h);
  for (int l = arch.L - 1; l >= 0; --l) {
    const int d = l == 0 ? arch.d_v : h;
    const int base = l * 8;
    const double* Wm1 = tensor(base + 0);
    const double* Wm2 = tensor(base + 2);
    const double* Wu1 = tensor(base + 4);
    const double* Wu2 = tensor(base + 6);
    double* gWm1 = grad(base + 0);
    double* gbm1 = grad(base + 1);
    double* gWm2 = grad(base + 2);
    double* gbm2 = grad(base + 3);
    double* gWu1 = grad(base + 4);
    double* gbu1 = grad(base + 5);
    double* gWu2 = grad(base + 6);
    double* gbu2 = grad(base + 7);
    const auto& layer = cache.layers[l];

    std::vector<std::vector<double>> dprev(V, std::vector<double>(d, 0.0));
    for (int v = 0; v < V; ++v) {
      const auto& s_next = cache.states[l + 1][v];
      const auto& uh = layer.upd_hidden[v];
      // through the update MLP
      for (int k = 0; k < h; ++k) dz[k] = dstate[v][k] * (1.0 - s_next[k] * s_next[k]);
      for (int r = 0; r < h; ++r) {
        gbu2[r] += dz[r];
        double* row = gWu2 + static_cast<std::size_t>(r) * h;
        for (int c = 0; c < h; ++c) row[c] += dz[r] * uh[c];
      }
      for (int c = 0; c < h; ++c) {
        double acc = 0.0;
        for (int r = 0; r < h; ++r) acc += Wu2[static_cast<std::size_t>(r) * h + c] * dz[r];
        duh[c] = acc;
      }
      for (int k = 0; k < h; ++k) dz1[k] = duh[k] * (1.0 - uh[k] * uh[k]);

      x.assign(cache.states[l][v].begin(), cache.states[l][v].end());
      x.insert(x.end(), layer.agg[v].begin(), layer.agg[v].end());
      const int in_dim = d + h;
      for (int r = 0; r < h; ++r) {
        gbu1[r] += dz1[r];
        double* row = gWu1 + static_cast<std::size_t>(r) * in_dim;
        for (int c = 0; c < in_dim; ++c) row[c] += dz1[r] * x[c];
      }
      dx.assign(in_dim, 0.0);
      for (int c = 0; c < in_dim; ++c) {
        double acc = 0.0;
        for (int r = 0; r < h; ++r)
          acc += Wu1[static_cast<std::size_t>(r) * in_dim + c] * dz1[r];
        dx[c] = acc;
      }
      for (int c = 0; c < d; ++c) dprev[v][c] += dx[c];

      // through the mean aggregation and message MLPs
      const auto& in = nbrs[v];
      if (in.empty()) continue;
      const double inv_deg = 1.0 / static_cast<double>(in.size());
      const int msg_dim = d + arch.d_e;
      for (std::size_t i = 0; i < in.size(); ++i) {
        const auto& mo = layer.msg_out[v][i];
        const auto& mh = layer.msg_hidden[v][i];
        for (int k = 0; k < h; ++k) {
          dmo[k] = dx[d + k] * inv_deg;
          dmz2[k] = dmo[k] * (1.0 - mo[k] * mo[k]);
        }
        for (int r = 0; r < h; ++r) {
          gbm2[r] += dmz2[r];
          double* row = gWm2 + static_cast<std::size_t>(r) * h;
          for (int c = 0; c < h; ++c) row[c] += dmz2[r] * mh[c];
        }
        for (int c = 0; c < h; ++c) {
          double acc = 0.0;
          for (int r = 0; r < h; ++r) acc += Wm2[static_cast<std::size_t>(r) * h + c] * dmz2[r];
          dmh[c] = acc;
        }
        for (int k = 0; k < h; ++k) dmz1[k] = dmh[k] * (1.0 - mh[k] * mh[k]);

        x.assign(cache.states[l][in[i].u].begin(), cache.states[l][in[i].u].end());
        x.push_back(in[i].feature);
        for (int r = 0; r < h; ++r) {
          gbm1[r] += dmz1[r];
          double* row = gWm1 + static_cast<std::size_t>(r) * msg_dim;
          for (int c = 0; c < msg_dim; ++c) row[c] += dmz1[r] * x[c];
        }
        // gradient into the source vertex state (edge feature is a constant)
        for (int c = 0; c < d; ++c) {
          double acc = 0.0;
          for (int r = 0; r < h; ++r)
            acc += Wm1[static_cast<std::size_t>(r) * msg_dim + c] * dmz1[r];
          dprev[in[i].u][c] += acc;
        }
      }
    }
    if (l > 0) dstate = std::move(dprev);
  }
  return g;
}

std::string params_to_json(const PolicyParams& params) {
  json j;
  j["version"] = 1;
  j["arch"] = {{"d_v", params.arch.d_v},
               {"d_e", params.arch.d_e},
               {"h", params.arch.h},
               {"L", params.arch.L}};
  j["values"] = params.values;
  return j.dump();
}

PolicyParams params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid checkpoint JSON: ") + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw ParseError("unsupported checkpoint version");
  PolicyParams p;
  p.arch.d_v = j["arch"]["d_v"].get<int>();
  p.arch.d_e = j["arch"]["d_e"].get<int>();
  p.arch.h = j["arch"]["h"].get<int>();
  p.arch.L = j["arch"]["L"].get<int>();
  p.values = j["values"].get<std::vector<double>>();
  const ParamLayout layout = make_layout(p.arch);
  if (p.values.size() != layout.total)
    throw ShapeError("checkpoint holds " + std::to_string(p.values.size()) +
                     " values, layout needs " + std::to_string(layout.total));
  return p;
}

}  // namespace iscc
