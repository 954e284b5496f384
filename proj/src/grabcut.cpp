#include "segd/grabcut.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "segd/config.hpp"
#include "segd/error.hpp"
#include "segd/maxflow.hpp"

namespace segd {

void GrabCutConfig::apply(const KeyValues& kv) {
  kv.read("gmm_k", gmm_k);
  kv.read("lambda", lambda);
  kv.read("n_g", n_g);
  kv.read("iters", iters);
  kv.read("soft_wrap", soft_wrap);
  unsigned long long s = seed;
  kv.read("seed", s);
  seed = s;
}

void GrabCutConfig::validate() const {
  if (gmm_k < 1) throw InvalidArgument("gmm_k must be at least 1");
  if (!(lambda >= 0)) throw InvalidArgument("lambda must be non-negative");
  if (n_g < 1) throw InvalidArgument("n_g must be at least 1");
  if (iters < 1) throw InvalidArgument("iters must be at least 1");
  if (em_iterations < 0) throw InvalidArgument("em iterations must be non-negative");
  if (!(variance_floor > 0)) throw InvalidArgument("variance floor must be positive");
  if (!(energy_tolerance >= 0)) throw InvalidArgument("energy tolerance must be non-negative");
}

namespace {

// Visits each 6-connected pair once as (i, j) with j the +x, +y or +z neighbor.
template <class Fn>
void for_each_pair(Dims d, Fn&& fn) {
  const std::size_t sx = 1, sy = static_cast<std::size_t>(d.nx), sz = d.frame_size();
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        std::size_t i = (static_cast<std::size_t>(z) * d.ny + y) * d.nx + x;
        if (x + 1 < d.nx) fn(i, i + sx);
        if (y + 1 < d.ny) fn(i, i + sy);
        if (z + 1 < d.nz) fn(i, i + sz);
      }
}

double link_weight(Hu a, Hu b, double lambda, double beta) {
  double diff = static_cast<double>(a) - b;
  return lambda * std::exp(-beta * diff * diff);
}

void check_chunk(std::span<const Hu> hu, Dims dims, std::span<const CutRole> roles) {
  validate_dims(dims);
  if (hu.size() != dims.count() || roles.size() != dims.count()) throw DimensionMismatch("chunk buffers do not match dims");
}

}  // namespace

double contrast_beta(std::span<const Hu> hu, Dims dims) {
  double sum = 0.0;
  std::size_t n = 0;
  for_each_pair(dims, [&](std::size_t i, std::size_t j) {
    double diff = static_cast<double>(hu[i]) - hu[j];
    sum += diff * diff;
    ++n;
  });
  if (n == 0 || sum == 0) return 0.0;
  return 1.0 / (2.0 * sum / static_cast<double>(n));
}

double chunk_energy(std::span<const Hu> hu, Dims dims, std::span<const CutRole> roles, std::span<const std::uint8_t> fg,
                    const Gmm1D& fg_model, const Gmm1D& bg_model, double lambda, double beta) {
  check_chunk(hu, dims, roles);
  if (fg.size() != dims.count()) throw DimensionMismatch("label buffer does not match dims");
  double e = 0.0;
  for (std::size_t i = 0; i < hu.size(); ++i) {
    if (!is_unknown(roles[i])) continue;
    e += fg[i] ? fg_model.neg_log_density(hu[i]) : bg_model.neg_log_density(hu[i]);
  }
  for_each_pair(dims, [&](std::size_t i, std::size_t j) {
    if ((is_unknown(roles[i]) || is_unknown(roles[j])) && fg[i] != fg[j]) e += link_weight(hu[i], hu[j], lambda, beta);
  });
  return e;
}

ChunkResult grabcut_chunk(std::span<const Hu> hu, Dims dims, std::span<const CutRole> roles, const GrabCutConfig& cfg,
                          std::uint64_t seed) {
  cfg.validate();
  check_chunk(hu, dims, roles);
  const std::size_t n = hu.size();
  ChunkResult out;
  out.fg.resize(n);
  std::vector<int> node(n, -1);
  std::vector<std::size_t> unknown;
  HuCounts hard_fg, hard_bg;
  for (std::size_t i = 0; i < n; ++i) {
    out.fg[i] = is_fg(roles[i]) ? 1 : 0;
    if (is_unknown(roles[i])) {
      node[i] = static_cast<int>(unknown.size());
      unknown.push_back(i);
    } else {
      (roles[i] == CutRole::HardFg ? hard_fg : hard_bg).add(hu[i]);
    }
  }
  if (unknown.empty()) return out;

  const double beta = contrast_beta(hu, dims);
  // Hard neighbors fold into t-links; unknown pairs become n-links.
  std::vector<double> link_fg(unknown.size(), 0.0), link_bg(unknown.size(), 0.0);
  struct Link {
    int a, b;
    double w;
  };
  std::vector<Link> links;
  for_each_pair(dims, [&](std::size_t i, std::size_t j) {
    bool ui = node[i] >= 0, uj = node[j] >= 0;
    if (!ui && !uj) return;
    double w = link_weight(hu[i], hu[j], cfg.lambda, beta);
    if (ui && uj) {
      links.push_back({node[i], node[j], w});
    } else {
      int u = ui ? node[i] : node[j];
      CutRole hard = ui ? roles[j] : roles[i];
      (hard == CutRole::HardFg ? link_fg : link_bg)[u] += w;
    }
  });

  Hu lo = hu[unknown.front()], hi = lo;
  for (std::size_t i : unknown) {
    lo = std::min(lo, hu[i]);
    hi = std::max(hi, hu[i]);
  }
  std::vector<double> cost_fg(static_cast<std::size_t>(hi - lo + 1)), cost_bg(cost_fg.size());

  GmmOptions gopt;
  gopt.k = cfg.gmm_k;
  gopt.em_iterations = cfg.em_iterations;
  gopt.variance_floor = cfg.variance_floor;
  double previous = 0.0;
  for (int it = 0; it < cfg.iters; ++it) {
    HuCounts fg_counts = hard_fg, bg_counts = hard_bg;
    for (std::size_t i : unknown) (out.fg[i] ? fg_counts : bg_counts).add(hu[i]);
    if (fg_counts.total() == 0 || bg_counts.total() == 0) break;
    gopt.seed = mix_seed(seed, 2 * static_cast<std::uint64_t>(it));
    Gmm1D fg_model = fit_gmm(fg_counts, gopt).model;
    gopt.seed = mix_seed(seed, 2 * static_cast<std::uint64_t>(it) + 1);
    Gmm1D bg_model = fit_gmm(bg_counts, gopt).model;
    for (int v = lo; v <= hi; ++v) {
      cost_fg[v - lo] = fg_model.neg_log_density(v);
      cost_bg[v - lo] = bg_model.neg_log_density(v);
    }

    // Source side is foreground: cutting s->v labels v background.
    FlowGraph g(static_cast<int>(unknown.size()), links.size());
    for (std::size_t u = 0; u < unknown.size(); ++u) {
      Hu h = hu[unknown[u]];
      g.add_terminal(static_cast<int>(u), cost_bg[h - lo] + link_fg[u], cost_fg[h - lo] + link_bg[u]);
    }
    for (const Link& l : links) g.add_edge(l.a, l.b, l.w, l.w);
    g.max_flow();
    for (std::size_t u = 0; u < unknown.size(); ++u) out.fg[unknown[u]] = g.is_source_side(static_cast<int>(u)) ? 1 : 0;

    double e = chunk_energy(hu, dims, roles, out.fg, fg_model, bg_model, cfg.lambda, beta);
    out.energy.push_back(e);
    out.fg_model = std::move(fg_model);
    out.bg_model = std::move(bg_model);
    if (it > 0 && std::abs(previous - e) < cfg.energy_tolerance * std::abs(previous)) break;
    previous = e;
  }
  return out;
}

std::vector<CutRole> cut_roles(const LabelVolume& labels, const HardLabelMap* scribbles, bool soft_wrap, int z0, int z1) {
  const Dims& d = labels.dims();
  if (scribbles && scribbles->dims != d) throw DimensionMismatch("scribble map does not match the volume");
  if (z0 < 0 || z1 > d.nz || z0 >= z1) throw RangeError("chunk frame range out of bounds");
  const std::size_t begin = static_cast<std::size_t>(z0) * d.frame_size();
  const std::size_t end = static_cast<std::size_t>(z1) * d.frame_size();
  std::vector<CutRole> roles(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    Label l = labels.data()[i];
    CutRole r = CutRole::HardBg;
    if (l == Label::Body) {
      r = CutRole::Fg;
    } else if (l == Label::Bandage) {
      r = soft_wrap ? CutRole::Bg : CutRole::HardBg;
    }
    if (scribbles && (l == Label::Body || l == Label::Bandage)) {
      HardLabel h = scribbles->labels[i];
      if (h == HardLabel::Fg) r = CutRole::HardFg;
      if (h == HardLabel::Bg) r = CutRole::HardBg;
    }
    roles[i - begin] = r;
  }
  return roles;
}

std::vector<int> chunk_starts(int nz, int n_g) {
  if (nz < 1 || n_g < 1) throw InvalidArgument("chunking needs positive frame counts");
  if (nz <= n_g) return {0};
  std::vector<int> s(static_cast<std::size_t>(nz - n_g + 1));
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<int>(i);
  return s;
}

LabelVolume grabcut_volume(const Volume& v, const LabelVolume& labels, const HardLabelMap* scribbles,
                           const GrabCutConfig& cfg, Exec exec, const ProgressFn& progress) {
  cfg.validate();
  if (v.dims() != labels.dims()) throw DimensionMismatch("label volume does not match the scan");
  const Dims& d = v.dims();
  const std::vector<int> starts = chunk_starts(d.nz, cfg.n_g);
  const int len = std::min(cfg.n_g, d.nz);
  std::vector<int> coverage(d.nz, 0);
  for (int s : starts)
    for (int z = s; z < s + len; ++z) ++coverage[z];

  std::vector<std::uint16_t> votes(d.count(), 0);
  std::mutex votes_mutex;
  ProgressCounter counter(&progress, static_cast<int>(starts.size()));
  for_each_index(exec, static_cast<int>(starts.size()), [&](int c) {
    const int z0 = starts[c];
    const std::size_t offset = static_cast<std::size_t>(z0) * d.frame_size();
    Dims cd{d.nx, d.ny, len};
    std::span<const Hu> hu(v.data().data() + offset, cd.count());
    std::vector<CutRole> roles = cut_roles(labels, scribbles, cfg.soft_wrap, z0, z0 + len);
    ChunkResult r = grabcut_chunk(hu, cd, roles, cfg, mix_seed(cfg.seed, static_cast<std::uint64_t>(c)));
    {
      std::lock_guard lock(votes_mutex);
      for (std::size_t i = 0; i < r.fg.size(); ++i) votes[offset + i] += r.fg[i];
    }
    counter.tick();
  });

  LabelVolume out = labels;
  for (int z = 0; z < d.nz; ++z) {
    auto f = out.frame(z);
    const std::size_t offset = static_cast<std::size_t>(z) * d.frame_size();
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (f[i] != Label::Body && f[i] != Label::Bandage) continue;
      f[i] = 2 * votes[offset + i] >= coverage[z] ? Label::Body : Label::Bandage;
    }
  }
  return out;
}

}  // namespace segd
