#include "vrfp/eval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "kmeans_impl.hpp"

namespace vrfp {

namespace {

// One synthetic bag: draw blocks, fill them, L2-normalize, shrink. Returns
// an empty-index SparseFV only if 100 redraws in a row come up empty, which
// the caller treats as a data error.
SparseFV synth_one(const SparsityProfile& p, std::mt19937_64& rng, double p_plain) {
  const std::size_t n = static_cast<std::size_t>(2) * p.K * p.D;
  const std::size_t bs = static_cast<std::size_t>(2) * p.D;
  FisherVector v;
  v.K = p.K;
  v.D = p.D;
  for (int attempt = 0; attempt < 100; ++attempt) {
    v.values.assign(n, 0.0f);
    v.norm_state.clear();
    v.degenerate = false;
    for (std::uint32_t c = 0; c < p.K; ++c) {
      double pc = p.biased ? (c < p.hot_count ? p.p_hot : p.p_low) : p_plain;
      if (detail::canonical_u01(rng()) >= pc) continue;
      float* block = v.values.data() + static_cast<std::size_t>(c) * bs;
      for (std::size_t e = 0; e < bs; ++e) {
        double sign = detail::canonical_u01(rng()) < 0.5 ? 1.0 : -1.0;
        double mag = p.threshold + (1.0 - p.threshold) * detail::canonical_u01(rng());
        block[e] = static_cast<float>(sign * mag);
      }
    }
    FisherVector norm = l2_normalize(std::move(v));
    if (!norm.degenerate) {
      SparseFV s = sparsify(norm, p.threshold);
      if (!s.indices.empty()) return s;
    }
    v = FisherVector{};
    v.K = p.K;
    v.D = p.D;
  }
  throw DataError("synth_gallery: could not draw a non-empty bag; raise the block probability");
}

void count_values(const SparseFV& s, std::uint64_t& blocks, std::uint64_t& nonzeros) {
  blocks += s.indices.size();
  for (float x : s.blocks)
    if (x != 0.0f) ++nonzeros;
}

std::uint64_t ranking_checksum(const RankedList& list) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& item : list.items) {
    mix(item.id.data(), item.id.size());
    std::uint64_t bits = std::bit_cast<std::uint64_t>(item.score);
    mix(&bits, sizeof(bits));
  }
  return h;
}

}  // namespace

SynthResult synth_gallery(const SparsityProfile& p) {
  if (p.K == 0 || p.D == 0 || p.M == 0)
    throw ArgumentError("synth_gallery: K, D and M must be positive");
  auto check_p = [](double v, const char* name) {
    if (!(v > 0.0) || v > 1.0)
      throw ArgumentError(std::string("synth_gallery: ") + name + " must be in (0, 1]");
  };
  if (p.biased) {
    if (p.hot_count == 0 || p.hot_count > p.K)
      throw ArgumentError("synth_gallery: hot_count must be in [1, K] for a biased profile");
    check_p(p.p_hot, "p_hot");
    check_p(p.p_low, "p_low");
  } else {
    check_p(p.p_gallery, "p_gallery");
    check_p(p.p_query, "p_query");
  }
  if (!(p.threshold >= 0.0f) || p.threshold >= 1.0f)
    throw ArgumentError("synth_gallery: threshold must be in [0, 1)");

  std::mt19937_64 rng(p.seed);
  SynthResult out;
  std::vector<IndexedEntry> entries;
  entries.reserve(p.M);
  char buf[32];
  for (std::uint32_t j = 0; j < p.M; ++j) {
    std::snprintf(buf, sizeof(buf), "v%06u", j);
    entries.push_back({buf, synth_one(p, rng, p.p_gallery)});
  }
  out.index = build_index(p.K, p.D, p.threshold, std::move(entries));
  out.query = synth_one(p, rng, p.p_query);

  for (const auto& e : out.index.entries)
    count_values(e.fv, out.stats.gallery_blocks, out.stats.gallery_value_nonzeros);
  count_values(out.query, out.stats.query_blocks, out.stats.query_value_nonzeros);
  out.stats.mean_block_occupancy = static_cast<double>(out.stats.gallery_blocks) /
                                   (static_cast<double>(p.M) * static_cast<double>(p.K));
  out.stats.query_block_fraction =
      static_cast<double>(out.stats.query_blocks) / static_cast<double>(p.K);
  return out;
}

double expected_speedup_unbiased(double p_t, double p_q, std::uint32_t K, std::uint32_t D) {
  if (K == 0 || D == 0) throw ArgumentError("expected_speedup_unbiased: K and D must be positive");
  if (!(p_t > 0.0) || p_t > 1.0 || !(p_q > 0.0) || p_q > 1.0)
    throw ArgumentError("expected_speedup_unbiased: probabilities must be in (0, 1]");
  return 1.0 / (p_t * p_q + std::min(p_t, p_q) / (2.0 * D));
}

double expected_speedup_biased(std::uint32_t K, std::uint32_t X, double p_h, double p_l) {
  if (K == 0 || X > K) throw ArgumentError("expected_speedup_biased: need 0 <= X <= K, K > 0");
  double denom = X * p_h * p_h + static_cast<double>(K - X) * p_l * p_l;
  if (!(denom > 0.0)) throw ArgumentError("expected_speedup_biased: degenerate profile");
  return static_cast<double>(K) / denom;
}

double expected_speedup_biased_dropped(std::uint32_t K, std::uint32_t X, double p_l) {
  if (K == 0 || X >= K) throw ArgumentError("expected_speedup_biased_dropped: need X < K, K > 0");
  double denom = static_cast<double>(K - X) * p_l * p_l;
  if (!(denom > 0.0)) throw ArgumentError("expected_speedup_biased_dropped: degenerate profile");
  return static_cast<double>(K) / denom;
}

double average_precision(const RankedList& ranked,
                         const std::unordered_set<std::string>& relevant) {
  if (relevant.empty()) throw ArgumentError("average_precision: relevant set is empty");
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < ranked.items.size(); ++i) {
    if (!relevant.count(ranked.items[i].id)) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

double mean_ap(const std::vector<double>& aps) {
  if (aps.empty()) throw ArgumentError("mean_ap: no values");
  double s = 0.0;
  for (double v : aps) s += v;
  return s / static_cast<double>(aps.size());
}

double topk_overlap(const RankedList& a, const RankedList& b, std::size_t k) {
  if (k == 0) throw ArgumentError("topk_overlap: k must be >= 1");
  std::unordered_set<std::string> ka;
  for (std::size_t i = 0; i < std::min(k, a.items.size()); ++i) ka.insert(a.items[i].id);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < std::min(k, b.items.size()); ++i)
    if (ka.count(b.items[i].id)) ++hit;
  return static_cast<double>(hit) / static_cast<double>(k);
}

BenchMethod parse_bench_method(const std::string& name) {
  if (name == "naive") return BenchMethod::Naive;
  if (name == "sparse") return BenchMethod::SparseSide;
  if (name == "ffp") return BenchMethod::Ffp;
  if (name == "ffp-lossy") return BenchMethod::FfpLossy;
  if (name == "pq") return BenchMethod::Pq;
  if (name == "hvsf") return BenchMethod::Hvsf;
  throw ArgumentError("unknown method '" + name +
                      "' (expected naive|sparse|ffp|ffp-lossy|pq|hvsf)");
}

const char* bench_method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::Naive: return "naive";
    case BenchMethod::SparseSide: return "sparse";
    case BenchMethod::Ffp: return "ffp";
    case BenchMethod::FfpLossy: return "ffp-lossy";
    case BenchMethod::Pq: return "pq";
    case BenchMethod::Hvsf: return "hvsf";
  }
  throw ArgumentError("invalid BenchMethod value");
}

BenchReport run_bench(const SparsityProfile& profile, const std::vector<BenchMethod>& methods,
                      std::uint32_t drop_r) {
  BenchReport report;
  report.profile = profile;
  report.drop_r = drop_r;

  SynthResult synth = synth_gallery(profile);
  report.stats = synth.stats;
  const GalleryIndex& index = synth.index;
  const SparseFV& query = synth.query;
  FisherVector dense_query = densify(query);

  if (!profile.biased)
    report.model_unbiased =
        expected_speedup_unbiased(profile.p_gallery, profile.p_query, profile.K, profile.D);
  if (profile.biased) {
    report.model_biased =
        expected_speedup_biased(profile.K, profile.hot_count, profile.p_hot, profile.p_low);
    if (drop_r > 0 && drop_r < profile.K)
      report.model_biased_dropped =
          expected_speedup_biased_dropped(profile.K, drop_r, profile.p_low);
  }

  DropList drop;
  PqCodebook pq_cb;
  PqCodes pq_codes;
  HvsfModel hvsf;
  bool need_drop = false, need_pq = false, need_hvsf = false;
  for (BenchMethod m : methods) {
    if (m == BenchMethod::FfpLossy) need_drop = true;
    if (m == BenchMethod::Pq) need_pq = true;
    if (m == BenchMethod::Hvsf) need_hvsf = true;
  }
  if (need_drop) {
    if (drop_r == 0)
      throw ArgumentError("run_bench: ffp-lossy needs drop_r > 0");
    drop = make_drop_list(index, drop_r);
  }
  if (need_pq) {
    pq_cb = pq_train(index, 8, profile.seed);
    pq_codes = pq_encode(index, pq_cb);
  }
  if (need_hvsf) hvsf = hvsf_build(index);

  std::uint64_t checksum_naive = 0, checksum_sparse = 0, checksum_ffp = 0;
  bool saw_naive = false, saw_sparse = false, saw_ffp = false;

  for (BenchMethod m : methods) {
    MethodReport mr;
    mr.name = bench_method_name(m);
    auto run_once = [&]() -> ScoreResult {
      switch (m) {
        case BenchMethod::Naive: return naive_dot(dense_query, index);
        case BenchMethod::SparseSide: return sparse_side_dot(dense_query, index);
        case BenchMethod::Ffp: return ffp_dot(query, index);
        case BenchMethod::FfpLossy: return ffp_dot(query, index, drop);
        case BenchMethod::Pq: return pq_score(dense_query, pq_cb, pq_codes);
        case BenchMethod::Hvsf: return hvsf_score(query, index, hvsf);
      }
      throw ArgumentError("invalid BenchMethod value");
    };

    ScoreResult result = run_once();  // warmup, also the measured answer
    std::vector<double> times;
    for (int rep = 0; rep < 5; ++rep) {
      auto t0 = std::chrono::steady_clock::now();
      ScoreResult timed = run_once();
      auto t1 = std::chrono::steady_clock::now();
      times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      (void)timed;
    }
    std::sort(times.begin(), times.end());
    mr.wall_ms = times[times.size() / 2];
    mr.ops = result.ops;
    mr.checksum = ranking_checksum(result.ranking);

    switch (m) {
      case BenchMethod::Naive: checksum_naive = mr.checksum; saw_naive = true; break;
      case BenchMethod::SparseSide: checksum_sparse = mr.checksum; saw_sparse = true; break;
      case BenchMethod::Ffp: checksum_ffp = mr.checksum; saw_ffp = true; break;
      case BenchMethod::FfpLossy: mr.note = "drop_r=" + std::to_string(drop_r); break;
      case BenchMethod::Pq: mr.note = "m=8, training excluded from timing"; break;
      case BenchMethod::Hvsf:
        mr.note = "f=" + std::to_string(hvsf.fraction).substr(0, 4) +
                  " R=" + std::to_string(hvsf.rerank_depth);
        break;
    }
    report.methods.push_back(std::move(mr));
  }

  if (saw_naive && saw_sparse && checksum_naive != checksum_sparse) report.lossless_agree = false;
  if (saw_naive && saw_ffp && checksum_naive != checksum_ffp) report.lossless_agree = false;
  if (saw_sparse && saw_ffp && checksum_sparse != checksum_ffp) report.lossless_agree = false;
  return report;
}

std::string format_bench_table(const BenchReport& r) {
  std::ostringstream os;
  char line[256];
  os << "profile: K=" << r.profile.K << " D=" << r.profile.D << " M=" << r.profile.M;
  if (r.profile.biased)
    os << " biased(X=" << r.profile.hot_count << " p_hot=" << r.profile.p_hot
       << " p_low=" << r.profile.p_low << ")";
  else
    os << " p_gallery=" << r.profile.p_gallery << " p_query=" << r.profile.p_query;
  os << " threshold=" << r.profile.threshold << " seed=" << r.profile.seed << "\n";
  std::snprintf(line, sizeof(line),
                "realized: gallery_blocks=%llu (occupancy %.4f) query_blocks=%llu (%.4f) "
                "C1=%llu C2=%llu\n",
                static_cast<unsigned long long>(r.stats.gallery_blocks),
                r.stats.mean_block_occupancy,
                static_cast<unsigned long long>(r.stats.query_blocks),
                r.stats.query_block_fraction,
                static_cast<unsigned long long>(r.stats.gallery_value_nonzeros),
                static_cast<unsigned long long>(r.stats.query_value_nonzeros));
  os << line;

  std::snprintf(line, sizeof(line), "%-10s %14s %14s %14s %10s %18s  %s\n", "method",
                "multiplies", "additions", "isect_ops", "wall_ms", "checksum", "note");
  os << line;
  const MethodReport* naive = nullptr;
  for (const auto& m : r.methods)
    if (m.name == "naive") naive = &m;
  for (const auto& m : r.methods) {
    std::snprintf(line, sizeof(line), "%-10s %14llu %14llu %14llu %10.3f %018llx  %s\n",
                  m.name.c_str(), static_cast<unsigned long long>(m.ops.multiplies),
                  static_cast<unsigned long long>(m.ops.additions),
                  static_cast<unsigned long long>(m.ops.intersection_ops), m.wall_ms,
                  static_cast<unsigned long long>(m.checksum), m.note.c_str());
    os << line;
  }
  if (naive) {
    for (const auto& m : r.methods) {
      if (&m == naive || m.ops.multiplies == 0) continue;
      std::snprintf(line, sizeof(line), "multiply speedup %s vs naive: %.2fx\n", m.name.c_str(),
                    static_cast<double>(naive->ops.multiplies) /
                        static_cast<double>(m.ops.multiplies));
      os << line;
      // The analytic model treats a membership probe and a multiply as one
      // operation each, so the combined count is the one it predicts.
      std::snprintf(line, sizeof(line), "combined (mult+probe) speedup %s vs naive: %.2fx\n",
                    m.name.c_str(),
                    static_cast<double>(naive->ops.multiplies) /
                        static_cast<double>(m.ops.multiplies + m.ops.intersection_ops));
      os << line;
    }
  }
  if (!r.profile.biased && r.model_unbiased > 0.0) {
    std::snprintf(line, sizeof(line),
                  "model: unbiased op-count speedup %.3f (nominal p, not wall time)\n",
                  r.model_unbiased);
    os << line;
  }
  if (r.profile.biased && r.model_biased > 0.0) {
    std::snprintf(line, sizeof(line), "model: biased op-count speedup %.4f\n", r.model_biased);
    os << line;
    if (r.model_biased_dropped > 0.0) {
      std::snprintf(line, sizeof(line),
                    "model: after dropping %u hot codewords %.4f (%+.1f%%)\n", r.drop_r,
                    r.model_biased_dropped,
                    100.0 * (r.model_biased_dropped / r.model_biased - 1.0));
      os << line;
    }
  }
  os << "lossless methods agree: " << (r.lossless_agree ? "yes" : "NO") << "\n";
  return os.str();
}

std::string format_bench_kv(const BenchReport& r) {
  std::ostringstream os;
  auto kv = [&os](const std::string& k, const std::string& v) { os << k << '\t' << v << '\n'; };
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  kv("profile.k", std::to_string(r.profile.K));
  kv("profile.d", std::to_string(r.profile.D));
  kv("profile.m", std::to_string(r.profile.M));
  kv("profile.biased", r.profile.biased ? "1" : "0");
  if (r.profile.biased) {
    kv("profile.hot_count", std::to_string(r.profile.hot_count));
    kv("profile.p_hot", num(r.profile.p_hot));
    kv("profile.p_low", num(r.profile.p_low));
  } else {
    kv("profile.p_gallery", num(r.profile.p_gallery));
    kv("profile.p_query", num(r.profile.p_query));
  }
  kv("profile.threshold", num(r.profile.threshold));
  kv("profile.seed", std::to_string(r.profile.seed));
  kv("stats.gallery_blocks", std::to_string(r.stats.gallery_blocks));
  kv("stats.query_blocks", std::to_string(r.stats.query_blocks));
  kv("stats.c1", std::to_string(r.stats.gallery_value_nonzeros));
  kv("stats.c2", std::to_string(r.stats.query_value_nonzeros));
  kv("stats.mean_block_occupancy", num(r.stats.mean_block_occupancy));
  kv("stats.query_block_fraction", num(r.stats.query_block_fraction));
  for (const auto& m : r.methods) {
    kv("method." + m.name + ".multiplies", std::to_string(m.ops.multiplies));
    kv("method." + m.name + ".additions", std::to_string(m.ops.additions));
    kv("method." + m.name + ".intersection_ops", std::to_string(m.ops.intersection_ops));
    kv("method." + m.name + ".ops_combined",
       std::to_string(m.ops.multiplies + m.ops.intersection_ops));
    kv("method." + m.name + ".wall_ms", num(m.wall_ms));
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(m.checksum));
    kv("method." + m.name + ".checksum", buf);
  }
  if (!r.profile.biased) kv("model.unbiased_speedup", num(r.model_unbiased));
  if (r.profile.biased) {
    kv("model.biased_speedup", num(r.model_biased));
    if (r.model_biased_dropped > 0.0) kv("model.biased_dropped_speedup", num(r.model_biased_dropped));
  }
  kv("lossless_agree", r.lossless_agree ? "1" : "0");
  kv("drop_r", std::to_string(r.drop_r));
  return os.str();
}

}  // namespace vrfp
