// Command line front end for the sparse video retrieval pipeline. One
// subcommand per pipeline stage plus synthetic benchmarking utilities.
//
// Exit codes: 0 success, 2 usage or argument errors, 3 data or file format
// errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vrfp/eval.hpp"
#include "vrfp/outlier.hpp"
#include "vrfp/rerank.hpp"

namespace fs = std::filesystem;

namespace {

struct AeFlags {
  std::uint32_t hidden = 0;  // 0 = d/4
  std::uint32_t epochs = 50;
  double lr = 0.01;
  std::uint32_t batch = 32;
  std::uint64_t seed = 0;
  bool linear = false;

  vrfp::AeTrainConfig config() const {
    vrfp::AeTrainConfig cfg;
    cfg.hidden = hidden;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.batch = batch;
    cfg.activation = linear ? vrfp::Activation::Linear : vrfp::Activation::Tanh;
    return cfg;
  }
};

void add_ae_flags(CLI::App* cmd, AeFlags& ae) {
  cmd->add_option("--ae-hidden", ae.hidden, "autoencoder hidden width (default d/4)");
  cmd->add_option("--ae-epochs", ae.epochs, "autoencoder training epochs")->default_val(50);
  cmd->add_option("--ae-lr", ae.lr, "autoencoder learning rate")->default_val(0.01);
  cmd->add_option("--ae-batch", ae.batch, "autoencoder batch size")->default_val(32);
  cmd->add_option("--ae-seed", ae.seed, "autoencoder init/shuffle seed")->default_val(0);
  cmd->add_flag("--ae-linear", ae.linear, "use a linear bottleneck instead of tanh");
}

std::vector<float> collect_role_features(const vrfp::CorpusManifest& manifest, vrfp::BagRole role) {
  std::vector<float> all;
  for (const auto& e : manifest.entries) {
    if (e.role != role) continue;
    vrfp::FeatureBag bag = vrfp::load_features(e.path);
    vrfp::validate_bag(bag);
    all.insert(all.end(), bag.data.begin(), bag.data.end());
  }
  return all;
}

vrfp::FeatureBag project_bag(const vrfp::FeatureBag& bag, const std::optional<vrfp::PcaModel>& pca,
                             bool whiten) {
  if (!pca) return bag;
  vrfp::FeatureBag out;
  out.id = bag.id;
  out.dim = pca->d_out;
  const std::size_t t = bag.count();
  out.data.reserve(t * pca->d_out);
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<float> y = vrfp::apply_pca(*pca, bag.row(i), whiten);
    out.data.insert(out.data.end(), y.begin(), y.end());
  }
  return out;
}

void write_text(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw vrfp::FormatError("cannot create " + path);
  out << body;
  out.flush();
  if (!out) throw vrfp::FormatError("write failed for " + path);
}

// ---- fit-codebook ---------------------------------------------------------

struct FitArgs {
  std::string manifest;
  std::string out_prefix;
  std::uint32_t k = 256;
  std::uint32_t pca_dims = 256;
  std::uint64_t seed = 0;
  bool no_pca = false;
  bool no_kmeans = false;
};

int cmd_fit_codebook(const FitArgs& a) {
  vrfp::CorpusManifest manifest = vrfp::load_manifest(a.manifest);
  std::vector<float> train = collect_role_features(manifest, vrfp::BagRole::Background);
  if (train.empty())
    throw vrfp::DataError("manifest has no background bags to train on");

  std::uint32_t dim = manifest.dim;
  std::optional<vrfp::PcaModel> pca;
  if (!a.no_pca) {
    pca = vrfp::fit_pca(train, dim, a.pca_dims);
    vrfp::save_pca(*pca, a.out_prefix + ".pca");
    std::vector<float> projected;
    const std::size_t t = train.size() / dim;
    projected.reserve(t * a.pca_dims);
    for (std::size_t i = 0; i < t; ++i) {
      std::vector<float> y = vrfp::apply_pca(
          *pca, std::span<const float>(train.data() + i * dim, dim), false);
      projected.insert(projected.end(), y.begin(), y.end());
    }
    train = std::move(projected);
    dim = a.pca_dims;
  }

  vrfp::GmmCodebook gmm = vrfp::fit_gmm(train, dim, a.k, a.seed);
  vrfp::save_gmm(gmm, a.out_prefix + ".gmm");
  if (!a.no_kmeans) {
    vrfp::KmeansCodebook km = vrfp::fit_kmeans(train, dim, a.k, a.seed);
    vrfp::save_kmeans(km, a.out_prefix + ".kms");
  }
  std::cout << "trained K=" << a.k << " codebooks on " << train.size() / dim << " features"
            << (a.no_pca ? "" : " (PCA to " + std::to_string(dim) + " dims)") << "\n";
  return 0;
}

// ---- encode ---------------------------------------------------------------

struct EncodeArgs {
  std::string manifest;
  std::string gmm;
  std::string pca;
  std::string out;
  std::string role = "video-frames";
  double threshold = vrfp::kDefaultShrinkThreshold;
  bool whiten = false;
  bool remove_outliers = false;
  AeFlags ae;
};

int cmd_encode(const EncodeArgs& a) {
  vrfp::CorpusManifest manifest = vrfp::load_manifest(a.manifest);
  vrfp::GmmCodebook gmm = vrfp::load_gmm(a.gmm);
  std::optional<vrfp::PcaModel> pca;
  if (!a.pca.empty()) pca = vrfp::load_pca(a.pca);
  vrfp::BagRole role = vrfp::parse_role(a.role);
  if (role == vrfp::BagRole::Background)
    throw vrfp::ArgumentError("encode expects role query-images or video-frames");

  std::vector<vrfp::IndexedEntry> entries;
  std::size_t dropped_rows = 0;
  for (const auto& e : manifest.entries) {
    if (e.role != role) continue;
    vrfp::FeatureBag bag = vrfp::load_features(e.path);
    bag.id = e.id;
    vrfp::validate_bag(bag);
    if (a.remove_outliers) {
      vrfp::OutlierRemovalResult res = vrfp::remove_outliers(bag, a.ae.config(), a.ae.seed);
      if (res.kept_all_warning)
        std::cerr << "warning: bag '" << bag.id << "' would lose every row, keeping all\n";
      dropped_rows += res.removed;
      bag = std::move(res.bag);
    }
    vrfp::FeatureBag ready = project_bag(bag, pca, a.whiten);
    vrfp::FisherVector raw = vrfp::fv_encode(gmm, ready);
    vrfp::FisherVector fin = role == vrfp::BagRole::QueryImages
                                 ? vrfp::finalize_query_fv(std::move(raw))
                                 : vrfp::finalize_video_fv(std::move(raw));
    entries.push_back({e.id, vrfp::sparsify(fin, static_cast<float>(a.threshold))});
  }
  if (entries.empty())
    throw vrfp::DataError("no manifest entries with role " + a.role);

  std::size_t m = entries.size();
  vrfp::GalleryIndex index = vrfp::build_index(
      gmm.K, gmm.D, static_cast<float>(a.threshold), std::move(entries));
  vrfp::save_index(index, a.out);
  std::cout << "encoded " << m << " bag(s) to " << a.out;
  if (a.remove_outliers) std::cout << " (outlier rows removed: " << dropped_rows << ")";
  std::cout << "\n";
  return 0;
}

// ---- search ---------------------------------------------------------------

struct SearchArgs {
  std::string query;
  std::string index;
  std::string out = "-";
  std::string method = "ffp";
  std::uint32_t drop_r = 0;
  std::uint32_t pq_m = 8;
  std::uint64_t seed = 0;
  double hvsf_f = 0.2;
  std::uint32_t hvsf_r = 500;
};

vrfp::SparseFV load_single_query(const std::string& path) {
  vrfp::GalleryIndex qidx = vrfp::load_index(path);
  if (qidx.size() != 1)
    throw vrfp::DataError("query file must contain exactly one encoded bag, found " +
                          std::to_string(qidx.size()));
  return qidx.entries[0].fv;
}

int cmd_search(const SearchArgs& a) {
  vrfp::GalleryIndex index = vrfp::load_index(a.index);
  vrfp::SparseFV query = load_single_query(a.query);
  vrfp::BenchMethod method = vrfp::parse_bench_method(a.method);
  if (a.drop_r > 0 && method != vrfp::BenchMethod::FfpLossy)
    throw vrfp::ArgumentError("--drop-r only applies to method ffp-lossy");

  vrfp::ScoreResult result;
  switch (method) {
    case vrfp::BenchMethod::Naive:
      result = vrfp::naive_dot(vrfp::densify(query), index);
      break;
    case vrfp::BenchMethod::SparseSide:
      result = vrfp::sparse_side_dot(vrfp::densify(query), index);
      break;
    case vrfp::BenchMethod::Ffp:
      result = vrfp::ffp_dot(query, index);
      break;
    case vrfp::BenchMethod::FfpLossy: {
      if (a.drop_r == 0) throw vrfp::ArgumentError("method ffp-lossy needs --drop-r > 0");
      result = vrfp::ffp_dot(query, index, vrfp::make_drop_list(index, a.drop_r));
      break;
    }
    case vrfp::BenchMethod::Pq: {
      vrfp::PqCodebook cb = vrfp::pq_train(index, a.pq_m, a.seed);
      vrfp::PqCodes codes = vrfp::pq_encode(index, cb);
      result = vrfp::pq_score(vrfp::densify(query), cb, codes);
      break;
    }
    case vrfp::BenchMethod::Hvsf: {
      vrfp::HvsfModel model = vrfp::hvsf_build(index, a.hvsf_f, a.hvsf_r);
      result = vrfp::hvsf_score(query, index, model);
      break;
    }
  }

  if (a.out == "-") {
    for (std::size_t i = 0; i < result.ranking.items.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.9g", result.ranking.items[i].score);
      std::cout << (i + 1) << '\t' << result.ranking.items[i].id << '\t' << buf << '\n';
    }
  } else {
    vrfp::write_ranked_tsv(result.ranking, a.out);
  }
  std::cerr << "ops: multiplies=" << result.ops.multiplies
            << " additions=" << result.ops.additions
            << " intersection_ops=" << result.ops.intersection_ops << "\n";
  return 0;
}

// ---- rerank ---------------------------------------------------------------

struct RerankArgs {
  std::string initial;
  std::string index;
  std::string out = "-";
  std::uint32_t top_n = 50;
};

int cmd_rerank(const RerankArgs& a) {
  vrfp::GalleryIndex index = vrfp::load_index(a.index);
  vrfp::RankedList initial = vrfp::read_ranked_tsv(a.initial);
  vrfp::PrfConfig cfg;
  cfg.top_n = a.top_n;
  vrfp::PrfResult res = vrfp::prf_rerank(initial, index, cfg);
  if (res.degenerate)
    std::cerr << "warning: feedback mean was zero, returning the initial ranking\n";
  if (a.out == "-") {
    for (std::size_t i = 0; i < res.ranking.items.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.9g", res.ranking.items[i].score);
      std::cout << (i + 1) << '\t' << res.ranking.items[i].id << '\t' << buf << '\n';
    }
  } else {
    vrfp::write_ranked_tsv(res.ranking, a.out);
  }
  return 0;
}

// ---- stats ----------------------------------------------------------------

struct StatsArgs {
  std::string index;
  std::string bag;
  std::string gmm;
  std::string out = "-";
};

int cmd_stats(const StatsArgs& a) {
  std::ostringstream os;
  if (!a.index.empty()) {
    vrfp::GalleryIndex index = vrfp::load_index(a.index);
    for (std::uint32_t c = 0; c < index.K; ++c)
      os << c << '\t' << index.occupancy[c] << '\n';
  } else {
    vrfp::FeatureBag bag = vrfp::load_features(a.bag);
    vrfp::GmmCodebook gmm = vrfp::load_gmm(a.gmm);
    std::vector<std::uint32_t> counts = vrfp::codeword_histogram(gmm, bag);
    for (std::uint32_t c = 0; c < gmm.K; ++c) os << c << '\t' << counts[c] << '\n';
  }
  write_text(a.out, os.str());
  return 0;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  vrfp::SparsityProfile profile;
  std::uint32_t hot_x = 0;
  std::string out_index;
  std::string out_query;
};

int cmd_synth(SynthArgs a) {
  if (a.hot_x > 0) {
    a.profile.biased = true;
    a.profile.hot_count = a.hot_x;
  }
  vrfp::SynthResult synth = vrfp::synth_gallery(a.profile);
  vrfp::save_index(synth.index, a.out_index);
  vrfp::GalleryIndex qwrap = vrfp::build_index(synth.index.K, synth.index.D,
                                               synth.index.threshold, {{"query", synth.query}});
  vrfp::save_index(qwrap, a.out_query);
  std::cout << "gallery_blocks\t" << synth.stats.gallery_blocks << "\n"
            << "query_blocks\t" << synth.stats.query_blocks << "\n"
            << "c1\t" << synth.stats.gallery_value_nonzeros << "\n"
            << "c2\t" << synth.stats.query_value_nonzeros << "\n"
            << "mean_block_occupancy\t" << synth.stats.mean_block_occupancy << "\n"
            << "query_block_fraction\t" << synth.stats.query_block_fraction << "\n";
  return 0;
}

// ---- bench ----------------------------------------------------------------

struct BenchArgs {
  vrfp::SparsityProfile profile;
  std::uint32_t hot_x = 0;
  std::string methods = "naive,sparse,ffp";
  std::uint32_t drop_r = 0;
  std::string out;
};

int cmd_bench(BenchArgs a) {
  if (a.hot_x > 0) {
    a.profile.biased = true;
    a.profile.hot_count = a.hot_x;
  }
  std::vector<vrfp::BenchMethod> methods;
  std::stringstream ss(a.methods);
  std::string token;
  while (std::getline(ss, token, ','))
    if (!token.empty()) methods.push_back(vrfp::parse_bench_method(token));
  if (methods.empty()) throw vrfp::ArgumentError("no methods given");

  vrfp::BenchReport report = vrfp::run_bench(a.profile, methods, a.drop_r);
  std::cout << vrfp::format_bench_table(report);
  if (!a.out.empty()) write_text(a.out, vrfp::format_bench_kv(report));
  return report.lossless_agree ? 0 : 1;
}

// ---- query (end to end) ---------------------------------------------------

struct QueryArgs {
  std::string features;
  std::string gmm;
  std::string pca;
  std::string index;
  std::string out = "-";
  double threshold = vrfp::kDefaultShrinkThreshold;
  std::uint32_t top_n = 50;
  bool whiten = false;
  bool no_rerank = false;
  bool remove_outliers = false;
  AeFlags ae;
};

int cmd_query(const QueryArgs& a) {
  vrfp::GalleryIndex index = vrfp::load_index(a.index);
  vrfp::GmmCodebook gmm = vrfp::load_gmm(a.gmm);
  std::optional<vrfp::PcaModel> pca;
  if (!a.pca.empty()) pca = vrfp::load_pca(a.pca);

  vrfp::FeatureBag bag = vrfp::load_features(a.features);
  vrfp::validate_bag(bag);
  if (a.remove_outliers) {
    vrfp::OutlierRemovalResult res = vrfp::remove_outliers(bag, a.ae.config(), a.ae.seed);
    if (res.kept_all_warning)
      std::cerr << "warning: query bag would lose every row, keeping all\n";
    bag = std::move(res.bag);
  }
  vrfp::FeatureBag ready = project_bag(bag, pca, a.whiten);
  vrfp::FisherVector fin = vrfp::finalize_query_fv(vrfp::fv_encode(gmm, ready));
  vrfp::SparseFV query = vrfp::sparsify(fin, static_cast<float>(a.threshold));
  if (query.threshold != index.threshold)
    throw vrfp::ArgumentError("query threshold does not match the index threshold");

  vrfp::ScoreResult result = vrfp::ffp_dot(query, index);
  vrfp::RankedList ranking = std::move(result.ranking);
  if (!a.no_rerank) {
    vrfp::PrfConfig cfg;
    cfg.top_n = std::min<std::uint32_t>(a.top_n, static_cast<std::uint32_t>(ranking.items.size()));
    if (cfg.top_n > 0) {
      vrfp::PrfResult prf = vrfp::prf_rerank(ranking, index, cfg);
      if (prf.degenerate)
        std::cerr << "warning: feedback mean was zero, keeping the first-pass ranking\n";
      ranking = std::move(prf.ranking);
    }
  }

  if (a.out == "-") {
    for (std::size_t i = 0; i < ranking.items.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.9g", ranking.items[i].score);
      std::cout << (i + 1) << '\t' << ranking.items[i].id << '\t' << buf << '\n';
    }
  } else {
    vrfp::write_ranked_tsv(ranking, a.out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse Fisher vector video retrieval"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-codebook", "train PCA, GMM and k-means codebooks");
  fit_cmd->add_option("--manifest", fit.manifest, "corpus manifest")->required()
      ->check(CLI::ExistingFile);
  fit_cmd->add_option("--out-prefix", fit.out_prefix, "output path prefix")->required();
  fit_cmd->add_option("--k", fit.k, "codebook size")->default_val(256);
  fit_cmd->add_option("--pca-dims", fit.pca_dims, "PCA output dimension")->default_val(256);
  fit_cmd->add_option("--seed", fit.seed, "training seed")->default_val(0);
  fit_cmd->add_flag("--no-pca", fit.no_pca, "train on raw features");
  fit_cmd->add_flag("--no-kmeans", fit.no_kmeans, "skip the k-means codebook");

  EncodeArgs enc;
  auto* enc_cmd = app.add_subcommand("encode", "encode manifest bags into a sparse index");
  enc_cmd->add_option("--manifest", enc.manifest, "corpus manifest")->required()
      ->check(CLI::ExistingFile);
  enc_cmd->add_option("--gmm", enc.gmm, "GMM codebook file")->required()->check(CLI::ExistingFile);
  enc_cmd->add_option("--pca", enc.pca, "PCA model file")->check(CLI::ExistingFile);
  enc_cmd->add_option("--role", enc.role, "bags to encode: query-images|video-frames")
      ->default_val("video-frames")
      ->check(CLI::IsMember({"query-images", "video-frames"}));
  enc_cmd->add_option("--threshold", enc.threshold, "shrink threshold")
      ->default_val(vrfp::kDefaultShrinkThreshold);
  enc_cmd->add_option("--out", enc.out, "output index file")->required();
  enc_cmd->add_flag("--whiten", enc.whiten, "whiten PCA projections");
  enc_cmd->add_flag("--remove-outliers", enc.remove_outliers,
                    "drop high reconstruction error rows before encoding");
  add_ae_flags(enc_cmd, enc.ae);

  SearchArgs search;
  auto* search_cmd = app.add_subcommand("search", "rank an index against one encoded query");
  search_cmd->add_option("--query", search.query, "query index file (one bag)")->required()
      ->check(CLI::ExistingFile);
  search_cmd->add_option("--index", search.index, "gallery index file")->required()
      ->check(CLI::ExistingFile);
  search_cmd->add_option("--out", search.out, "ranked TSV path or - for stdout")->default_val("-");
  search_cmd->add_option("--method", search.method, "naive|sparse|ffp|ffp-lossy|pq|hvsf")
      ->default_val("ffp");
  search_cmd->add_option("--drop-r", search.drop_r, "drop the r busiest codewords (ffp-lossy)")
      ->default_val(0);
  search_cmd->add_option("--pq-m", search.pq_m, "PQ subvector length")->default_val(8);
  search_cmd->add_option("--seed", search.seed, "PQ training seed")->default_val(0);
  search_cmd->add_option("--hvsf-f", search.hvsf_f, "high-variance codeword fraction")
      ->default_val(0.2);
  search_cmd->add_option("--hvsf-r", search.hvsf_r, "exact rescoring depth")->default_val(500);

  RerankArgs rerank;
  auto* rerank_cmd = app.add_subcommand("rerank", "pseudo-relevance feedback over a ranking");
  rerank_cmd->add_option("--initial", rerank.initial, "initial ranked TSV")->required()
      ->check(CLI::ExistingFile);
  rerank_cmd->add_option("--index", rerank.index, "gallery index file")->required()
      ->check(CLI::ExistingFile);
  rerank_cmd->add_option("--out", rerank.out, "ranked TSV path or - for stdout")->default_val("-");
  rerank_cmd->add_option("--top-n", rerank.top_n, "feedback depth")->default_val(50);

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "codeword occupancy or posterior histograms");
  auto* stats_index = stats_cmd->add_option("--index", stats.index, "gallery index file")
                          ->check(CLI::ExistingFile);
  auto* stats_bag = stats_cmd->add_option("--bag", stats.bag, "feature file")
                        ->check(CLI::ExistingFile);
  stats_cmd->add_option("--gmm", stats.gmm, "GMM codebook (with --bag)")->check(CLI::ExistingFile);
  stats_cmd->add_option("--out", stats.out, "TSV path or - for stdout")->default_val("-");
  stats_index->excludes(stats_bag);
  stats_bag->needs(stats_cmd->get_option("--gmm"));

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "draw a synthetic sparse gallery and query");
  synth_cmd->add_option("--k", synth.profile.K, "codewords")->default_val(256);
  synth_cmd->add_option("--d", synth.profile.D, "local feature dims")->default_val(16);
  synth_cmd->add_option("--m", synth.profile.M, "gallery size")->default_val(2000);
  synth_cmd->add_option("--p-t", synth.profile.p_gallery, "gallery block probability")
      ->default_val(0.07);
  synth_cmd->add_option("--p-q", synth.profile.p_query, "query block probability")
      ->default_val(0.15);
  synth_cmd->add_option("--hot-x", synth.hot_x, "biased profile: number of hot codewords")
      ->default_val(0);
  synth_cmd->add_option("--p-h", synth.profile.p_hot, "hot block probability")->default_val(0.5);
  synth_cmd->add_option("--p-l", synth.profile.p_low, "cold block probability")->default_val(0.1);
  synth_cmd->add_option("--threshold", synth.profile.threshold, "shrink threshold")
      ->default_val(vrfp::kDefaultShrinkThreshold);
  synth_cmd->add_option("--seed", synth.profile.seed, "draw seed")->default_val(0);
  synth_cmd->add_option("--out-index", synth.out_index, "gallery index output")->required();
  synth_cmd->add_option("--out-query", synth.out_query, "query index output")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "op-count and wall-clock comparison");
  bench_cmd->add_option("--k", bench.profile.K, "codewords")->default_val(256);
  bench_cmd->add_option("--d", bench.profile.D, "local feature dims")->default_val(16);
  bench_cmd->add_option("--m", bench.profile.M, "gallery size")->default_val(2000);
  bench_cmd->add_option("--p-t", bench.profile.p_gallery, "gallery block probability")
      ->default_val(0.07);
  bench_cmd->add_option("--p-q", bench.profile.p_query, "query block probability")
      ->default_val(0.15);
  bench_cmd->add_option("--hot-x", bench.hot_x, "biased profile: number of hot codewords")
      ->default_val(0);
  bench_cmd->add_option("--p-h", bench.profile.p_hot, "hot block probability")->default_val(0.5);
  bench_cmd->add_option("--p-l", bench.profile.p_low, "cold block probability")->default_val(0.1);
  bench_cmd->add_option("--threshold", bench.profile.threshold, "shrink threshold")
      ->default_val(vrfp::kDefaultShrinkThreshold);
  bench_cmd->add_option("--seed", bench.profile.seed, "draw seed")->default_val(0);
  bench_cmd->add_option("--methods", bench.methods, "comma list of methods")
      ->default_val("naive,sparse,ffp");
  bench_cmd->add_option("--drop-r", bench.drop_r, "drop list size for ffp-lossy")->default_val(0);
  bench_cmd->add_option("--out", bench.out, "also write key\\tvalue lines here");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "encode a feature bag and search end to end");
  query_cmd->add_option("--features", query.features, "query feature file")->required()
      ->check(CLI::ExistingFile);
  query_cmd->add_option("--gmm", query.gmm, "GMM codebook file")->required()
      ->check(CLI::ExistingFile);
  query_cmd->add_option("--pca", query.pca, "PCA model file")->check(CLI::ExistingFile);
  query_cmd->add_option("--index", query.index, "gallery index file")->required()
      ->check(CLI::ExistingFile);
  query_cmd->add_option("--out", query.out, "ranked TSV path or - for stdout")->default_val("-");
  query_cmd->add_option("--threshold", query.threshold, "shrink threshold")
      ->default_val(vrfp::kDefaultShrinkThreshold);
  query_cmd->add_option("--top-n", query.top_n, "feedback depth")->default_val(50);
  query_cmd->add_flag("--whiten", query.whiten, "whiten PCA projections");
  query_cmd->add_flag("--no-rerank", query.no_rerank, "skip pseudo-relevance feedback");
  query_cmd->add_flag("--remove-outliers", query.remove_outliers,
                      "drop high reconstruction error rows before encoding");
  add_ae_flags(query_cmd, query.ae);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*fit_cmd) return cmd_fit_codebook(fit);
    if (*enc_cmd) return cmd_encode(enc);
    if (*search_cmd) return cmd_search(search);
    if (*rerank_cmd) return cmd_rerank(rerank);
    if (*stats_cmd) {
      if (stats.index.empty() && stats.bag.empty())
        throw vrfp::ArgumentError("stats needs --index or --bag with --gmm");
      return cmd_stats(stats);
    }
    if (*synth_cmd) return cmd_synth(synth);
    if (*bench_cmd) return cmd_bench(bench);
    if (*query_cmd) return cmd_query(query);
  } catch (const vrfp::ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const vrfp::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vrfp::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
