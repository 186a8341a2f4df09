#include "vrfp/match.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "kmeans_impl.hpp"

namespace vrfp {

namespace {

int thread_count() {
  const char* env = std::getenv("VRFP_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1) return 1;
  return static_cast<int>(std::min<long>(v, 256));
}

// Runs fn(entry_index, slot) over all entries, sliced across VRFP_THREADS
// workers. Each worker gets its own slot for scratch, results land in
// per-entry arrays, so output never depends on the thread count.
template <class Fn>
void for_entries(std::size_t m, Fn&& fn) {
  int t = thread_count();
  if (t > 1 && static_cast<std::size_t>(t) > m) t = static_cast<int>(m);
  if (t <= 1) {
    for (std::size_t i = 0; i < m; ++i) fn(i, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(t);
  for (int w = 0; w < t; ++w) {
    std::size_t lo = m * w / t;
    std::size_t hi = m * (w + 1) / t;
    workers.emplace_back([&fn, lo, hi, w] {
      for (std::size_t i = lo; i < hi; ++i) fn(i, w);
    });
  }
  for (auto& th : workers) th.join();
}

int max_slots() { return std::max(1, thread_count()); }

void check_dense_query(const FisherVector& query, const GalleryIndex& index, const char* what) {
  if (query.K != index.K || query.D != index.D)
    throw ArgumentError(std::string(what) + ": query K/D does not match index");
  if (query.values.size() != static_cast<std::size_t>(2) * index.K * index.D)
    throw ArgumentError(std::string(what) + ": query value count is inconsistent");
}

// One codeword block of products accumulated in ascending element order.
inline void block_dot(const float* q, const float* v, std::size_t n, double& acc,
                      std::uint64_t& mults, std::uint64_t& adds) {
  for (std::size_t e = 0; e < n; ++e) acc += static_cast<double>(q[e]) * static_cast<double>(v[e]);
  mults += n;
  adds += n;
}

struct EntryOps {
  double score = 0.0;
  OpCounter ops;
};

ScoreResult gather(const GalleryIndex& index, std::vector<EntryOps>& per_entry) {
  ScoreResult res;
  std::vector<ScoredId> scored(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    scored[i] = {index.entries[i].id, per_entry[i].score};
    res.ops += per_entry[i].ops;
  }
  res.ranking = finalize_ranking(std::move(scored));
  return res;
}

}  // namespace

RankedList finalize_ranking(std::vector<ScoredId> scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  RankedList out;
  out.items = std::move(scored);
  return out;
}

ScoreResult naive_dot(const FisherVector& query, const GalleryIndex& index) {
  check_dense_query(query, index, "naive_dot");
  const std::size_t n = query.values.size();
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;

  std::vector<EntryOps> per_entry(index.size());
  std::vector<std::vector<float>> scratch(max_slots());

  for_entries(index.size(), [&](std::size_t i, int slot) {
    auto& dense = scratch[slot];
    if (dense.size() != n) dense.assign(n, 0.0f);
    const SparseFV& fv = index.entries[i].fv;
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos)
      std::memcpy(dense.data() + static_cast<std::size_t>(fv.indices[pos]) * bs, fv.block(pos),
                  bs * sizeof(float));

    EntryOps& eo = per_entry[i];
    double acc = 0.0;
    const float* q = query.values.data();
    for (std::size_t e = 0; e < n; ++e)
      acc += static_cast<double>(q[e]) * static_cast<double>(dense[e]);
    eo.score = acc;
    eo.ops.multiplies = n;
    eo.ops.additions = n;

    // Wipe only what we touched so the scratch stays zero for the next entry.
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos)
      std::memset(dense.data() + static_cast<std::size_t>(fv.indices[pos]) * bs, 0,
                  bs * sizeof(float));
  });
  return gather(index, per_entry);
}

ScoreResult sparse_side_dot(const FisherVector& query, const GalleryIndex& index) {
  check_dense_query(query, index, "sparse_side_dot");
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;
  std::vector<EntryOps> per_entry(index.size());

  for_entries(index.size(), [&](std::size_t i, int) {
    const SparseFV& fv = index.entries[i].fv;
    EntryOps& eo = per_entry[i];
    double acc = 0.0;
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos)
      block_dot(query.values.data() + static_cast<std::size_t>(fv.indices[pos]) * bs,
                fv.block(pos), bs, acc, eo.ops.multiplies, eo.ops.additions);
    eo.score = acc;
  });
  return gather(index, per_entry);
}

ScoreResult ffp_dot(const SparseFV& query, const GalleryIndex& index, const DropList& drop) {
  if (query.K != index.K || query.D != index.D)
    throw ArgumentError("ffp_dot: query K/D does not match index");
  if (query.threshold != index.threshold)
    throw ArgumentError("ffp_dot: query and index use different shrink thresholds, "
                        "scores would not be comparable");
  validate_sparse_fv(query);
  for (std::size_t i = 0; i < drop.indices.size(); ++i) {
    if (drop.indices[i] >= index.K) throw ArgumentError("ffp_dot: drop codeword out of range");
    if (i > 0 && drop.indices[i] <= drop.indices[i - 1])
      throw ArgumentError("ffp_dot: drop list must be strictly increasing");
  }

  const std::uint32_t K = index.K;
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;

  // Query-side lookup: mask of live codewords and their block positions.
  std::vector<std::uint8_t> qmask(K, 0);
  std::vector<std::uint32_t> qpos(K, 0);
  std::vector<std::uint32_t> qlist;
  qlist.reserve(query.indices.size());
  for (std::size_t pos = 0; pos < query.indices.size(); ++pos) {
    std::uint32_t c = query.indices[pos];
    if (std::binary_search(drop.indices.begin(), drop.indices.end(), c)) continue;
    qmask[c] = 1;
    qpos[c] = static_cast<std::uint32_t>(pos);
    qlist.push_back(c);
  }

  std::vector<EntryOps> per_entry(index.size());
  for_entries(index.size(), [&](std::size_t i, int) {
    const SparseFV& fv = index.entries[i].fv;
    EntryOps& eo = per_entry[i];
    double acc = 0.0;
    if (fv.indices.size() <= qlist.size()) {
      // Probe the entry's codewords against the query mask.
      for (std::size_t pos = 0; pos < fv.indices.size(); ++pos) {
        ++eo.ops.intersection_ops;
        std::uint32_t c = fv.indices[pos];
        if (!qmask[c]) continue;
        block_dot(query.block(qpos[c]), fv.block(pos), bs, acc, eo.ops.multiplies,
                  eo.ops.additions);
      }
    } else {
      // Probe the query's codewords against the entry's sorted index list.
      for (std::uint32_t c : qlist) {
        ++eo.ops.intersection_ops;
        auto it = std::lower_bound(fv.indices.begin(), fv.indices.end(), c);
        if (it == fv.indices.end() || *it != c) continue;
        std::size_t pos = static_cast<std::size_t>(it - fv.indices.begin());
        block_dot(query.block(qpos[c]), fv.block(pos), bs, acc, eo.ops.multiplies,
                  eo.ops.additions);
      }
    }
    eo.score = acc;
  });
  return gather(index, per_entry);
}

PqCodebook pq_train(const GalleryIndex& index, std::uint32_t m, std::uint64_t seed,
                    std::vector<KmeansTrainLog>* logs) {
  const std::size_t n = static_cast<std::size_t>(2) * index.K * index.D;
  if (m == 0 || n % m != 0)
    throw ArgumentError("pq_train: subvector length must divide the encoding length");
  const std::size_t gallery = index.size();
  if (gallery == 0) throw ArgumentError("pq_train: cannot train on an empty gallery");

  PqCodebook cb;
  cb.m = m;
  cb.n_subspaces = static_cast<std::uint32_t>(n / m);
  cb.counts.resize(cb.n_subspaces);
  cb.tables.resize(cb.n_subspaces);
  if (logs) logs->assign(cb.n_subspaces, {});

  // Densify once; subvectors are column slices of this matrix.
  std::vector<float> dense(gallery * n, 0.0f);
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;
  for (std::size_t j = 0; j < gallery; ++j) {
    const SparseFV& fv = index.entries[j].fv;
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos)
      std::memcpy(dense.data() + j * n + static_cast<std::size_t>(fv.indices[pos]) * bs,
                  fv.block(pos), bs * sizeof(float));
  }

  std::vector<float> sub(gallery * m);
  std::vector<std::size_t> order(gallery);
  for (std::uint32_t s = 0; s < cb.n_subspaces; ++s) {
    for (std::size_t j = 0; j < gallery; ++j)
      std::memcpy(sub.data() + j * m, dense.data() + j * n + static_cast<std::size_t>(s) * m,
                  m * sizeof(float));

    std::iota(order.begin(), order.end(), std::size_t{0});
    auto row_less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(sub.begin() + a * m, sub.begin() + (a + 1) * m,
                                          sub.begin() + b * m, sub.begin() + (b + 1) * m);
    };
    std::sort(order.begin(), order.end(), row_less);
    std::size_t distinct = 1;
    for (std::size_t j = 1; j < gallery; ++j)
      if (row_less(order[j - 1], order[j])) ++distinct;

    std::uint32_t ks = static_cast<std::uint32_t>(std::min<std::size_t>({256, gallery, distinct}));
    cb.counts[s] = ks;
    detail::KmeansScratch km =
        detail::lloyd_kmeans(sub.data(), gallery, m, ks, seed + 0x9e3779b97f4a7c15ULL * (s + 1),
                             logs ? &(*logs)[s] : nullptr);
    cb.tables[s].resize(static_cast<std::size_t>(ks) * m);
    for (std::size_t i = 0; i < cb.tables[s].size(); ++i)
      cb.tables[s][i] = static_cast<float>(km.centers[i]);
  }
  return cb;
}

PqCodes pq_encode(const GalleryIndex& index, const PqCodebook& cb) {
  const std::size_t n = static_cast<std::size_t>(2) * index.K * index.D;
  if (static_cast<std::size_t>(cb.m) * cb.n_subspaces != n)
    throw ArgumentError("pq_encode: codebook geometry does not match index");

  PqCodes out;
  out.m = cb.m;
  out.n_subspaces = cb.n_subspaces;
  out.codes.resize(index.size() * cb.n_subspaces);
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;

  std::vector<float> dense(n, 0.0f);
  std::vector<float> subq(cb.m);
  for (std::size_t j = 0; j < index.size(); ++j) {
    const SparseFV& fv = index.entries[j].fv;
    out.ids.push_back(index.entries[j].id);
    std::fill(dense.begin(), dense.end(), 0.0f);
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos)
      std::memcpy(dense.data() + static_cast<std::size_t>(fv.indices[pos]) * bs, fv.block(pos),
                  bs * sizeof(float));
    for (std::uint32_t s = 0; s < cb.n_subspaces; ++s) {
      const float* x = dense.data() + static_cast<std::size_t>(s) * cb.m;
      const auto& table = cb.tables[s];
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::uint32_t c = 0; c < cb.counts[s]; ++c) {
        const float* ctr = table.data() + static_cast<std::size_t>(c) * cb.m;
        double d2 = 0.0;
        for (std::uint32_t d = 0; d < cb.m; ++d) {
          double diff = static_cast<double>(x[d]) - ctr[d];
          d2 += diff * diff;
        }
        if (d2 < best_d) {
          best_d = d2;
          best = c;
        }
      }
      out.codes[j * cb.n_subspaces + s] = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

ScoreResult pq_score(const FisherVector& query, const PqCodebook& cb, const PqCodes& codes) {
  if (query.values.size() != static_cast<std::size_t>(cb.m) * cb.n_subspaces)
    throw ArgumentError("pq_score: query length does not match codebook geometry");
  if (codes.m != cb.m || codes.n_subspaces != cb.n_subspaces)
    throw ArgumentError("pq_score: codes do not match codebook geometry");

  ScoreResult res;
  // Asymmetric lookup tables: inner product of each query subvector with
  // every centroid. This build cost is charged to the op counter too.
  std::vector<std::vector<double>> lut(cb.n_subspaces);
  for (std::uint32_t s = 0; s < cb.n_subspaces; ++s) {
    const float* q = query.values.data() + static_cast<std::size_t>(s) * cb.m;
    lut[s].resize(cb.counts[s]);
    for (std::uint32_t c = 0; c < cb.counts[s]; ++c) {
      const float* ctr = cb.tables[s].data() + static_cast<std::size_t>(c) * cb.m;
      double acc = 0.0;
      for (std::uint32_t d = 0; d < cb.m; ++d)
        acc += static_cast<double>(q[d]) * static_cast<double>(ctr[d]);
      lut[s][c] = acc;
      res.ops.multiplies += cb.m;
      res.ops.additions += cb.m;
    }
  }

  std::vector<ScoredId> scored(codes.ids.size());
  for (std::size_t j = 0; j < codes.ids.size(); ++j) {
    double acc = 0.0;
    const std::uint8_t* row = codes.codes.data() + j * cb.n_subspaces;
    for (std::uint32_t s = 0; s < cb.n_subspaces; ++s) acc += lut[s][row[s]];
    res.ops.additions += cb.n_subspaces;
    scored[j] = {codes.ids[j], acc};
  }
  res.ranking = finalize_ranking(std::move(scored));
  return res;
}

HvsfModel hvsf_build(const GalleryIndex& index, double fraction, std::uint32_t rerank_depth) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ArgumentError("hvsf_build: fraction must be in (0, 1]");

  HvsfModel model;
  model.K = index.K;
  model.fraction = fraction;
  model.rerank_depth = rerank_depth;
  model.variances.assign(index.K, 0.0);

  const std::size_t bs = static_cast<std::size_t>(2) * index.D;
  const double denom = static_cast<double>(index.size()) * static_cast<double>(bs);
  if (denom > 0.0) {
    std::vector<double> sum(index.K, 0.0), sumsq(index.K, 0.0);
    for (const auto& e : index.entries)
      for (std::size_t pos = 0; pos < e.fv.indices.size(); ++pos) {
        const float* b = e.fv.block(pos);
        double s = 0.0, q = 0.0;
        for (std::size_t i = 0; i < bs; ++i) {
          s += b[i];
          q += static_cast<double>(b[i]) * b[i];
        }
        sum[e.fv.indices[pos]] += s;
        sumsq[e.fv.indices[pos]] += q;
      }
    // Absent blocks are zeros; they contribute to the denominator only.
    for (std::uint32_t c = 0; c < index.K; ++c) {
      double mean = sum[c] / denom;
      model.variances[c] = std::max(0.0, sumsq[c] / denom - mean * mean);
    }
  }

  std::size_t h = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(index.K)));
  h = std::min<std::size_t>(std::max<std::size_t>(h, 1), index.K);
  std::vector<std::uint32_t> order(index.K);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return model.variances[a] > model.variances[b];
  });
  model.hot.assign(order.begin(), order.begin() + h);
  std::sort(model.hot.begin(), model.hot.end());
  return model;
}

ScoreResult hvsf_score(const SparseFV& query, const GalleryIndex& index, const HvsfModel& model) {
  if (model.K != index.K) throw ArgumentError("hvsf_score: model does not match index");

  // Stage one: the query restricted to high-variance codewords.
  std::vector<std::uint8_t> hotmask(index.K, 0);
  for (std::uint32_t c : model.hot) hotmask[c] = 1;
  SparseFV stage1_query;
  stage1_query.K = query.K;
  stage1_query.D = query.D;
  stage1_query.threshold = query.threshold;
  const std::size_t bs = static_cast<std::size_t>(2) * query.D;
  for (std::size_t pos = 0; pos < query.indices.size(); ++pos) {
    if (!hotmask[query.indices[pos]]) continue;
    stage1_query.indices.push_back(query.indices[pos]);
    stage1_query.blocks.insert(stage1_query.blocks.end(), query.block(pos),
                               query.block(pos) + bs);
  }

  ScoreResult stage1 = ffp_dot(stage1_query, index);

  // Stage two: exact rescoring of the leading candidates.
  std::size_t depth = std::min<std::size_t>(model.rerank_depth, stage1.ranking.items.size());
  if (depth == 0) return stage1;

  std::vector<IndexedEntry> top;
  top.reserve(depth);
  std::vector<std::size_t> entry_of;  // position in the full index, build order
  entry_of.reserve(depth);
  // Map ids back to entries once.
  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) by_id.emplace(index.entries[i].id, i);
  for (std::size_t r = 0; r < depth; ++r)
    top.push_back(index.entries[by_id.at(stage1.ranking.items[r].id)]);

  GalleryIndex head = build_index(index.K, index.D, index.threshold, std::move(top));
  ScoreResult exact = ffp_dot(query, head);

  ScoreResult out;
  out.ops = stage1.ops;
  out.ops += exact.ops;
  out.ranking.items = exact.ranking.items;
  for (std::size_t r = depth; r < stage1.ranking.items.size(); ++r)
    out.ranking.items.push_back(stage1.ranking.items[r]);
  return out;
}

void write_ranked_tsv(const RankedList& list, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", list.items[i].score);
    out << (i + 1) << '\t' << list.items[i].id << '\t' << buf << '\n';
  }
  out.flush();
  if (!out) throw FormatError("write failed for " + path.string());
}

RankedList read_ranked_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  RankedList list;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string rank_text, id, score_text;
    if (!std::getline(ls, rank_text, '\t') || !std::getline(ls, id, '\t') ||
        !std::getline(ls, score_text, '\t') || id.empty())
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected <rank>\\t<id>\\t<score>");
    std::size_t pos = 0;
    unsigned long rank = 0;
    double score = 0.0;
    try {
      rank = std::stoul(rank_text, &pos);
      if (pos != rank_text.size()) throw std::invalid_argument("rank");
      score = std::stod(score_text, &pos);
      if (pos != score_text.size()) throw std::invalid_argument("score");
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unparseable rank or score");
    }
    if (rank != list.items.size() + 1)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": ranks must run 1..n");
    list.items.push_back({id, score});
  }
  return list;
}

}  // namespace vrfp
