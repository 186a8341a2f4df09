#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"

using namespace vrfp;
using testutil::TempDir;

namespace {

RankedList list_of(std::initializer_list<const char*> ids) {
  RankedList l;
  double s = 1.0;
  for (const char* id : ids) {
    l.items.push_back({id, s});
    s -= 0.01;
  }
  return l;
}

}  // namespace

TEST_CASE("average precision hand cases") {
  RankedList l = list_of({"r1", "n1", "r2"});
  std::unordered_set<std::string> rel = {"r1", "r2"};
  CHECK(std::abs(average_precision(l, rel) - 5.0 / 6.0) < 1e-12);

  RankedList front = list_of({"r1", "r2", "n1", "n2"});
  CHECK(average_precision(front, rel) == 1.0);

  RankedList single = list_of({"n1", "n2", "r1", "n3"});
  CHECK(average_precision(single, {"r1"}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // A relevant item missing from the list still divides the sum.
  RankedList partial = list_of({"r1", "n1"});
  CHECK(average_precision(partial, {"r1", "ghost"}) == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS(average_precision(l, {}), ArgumentError);
}

TEST_CASE("average precision equals the brute-force definition on random lists") {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 50; ++round) {
    std::size_t n = 1 + rng() % 30;
    RankedList l;
    std::vector<std::pair<std::string, bool>> flagged;
    std::unordered_set<std::string> rel;
    std::size_t rel_total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id = "v" + std::to_string(i);
      bool is_rel = testutil::u01(rng) < 0.4;
      l.items.push_back({id, 1.0 - 0.01 * static_cast<double>(i)});
      flagged.push_back({id, is_rel});
      if (is_rel) {
        rel.insert(id);
        rel_total++;
      }
    }
    // Occasionally count a relevant id that never appears in the list.
    if (round % 5 == 0) {
      rel.insert("missing");
      rel_total++;
    }
    if (rel.empty()) continue;
    CHECK(average_precision(l, rel) == testutil::ap_oracle(flagged, rel_total));
  }
}

TEST_CASE("mean ap is the arithmetic mean") {
  CHECK(mean_ap({1.0}) == 1.0);
  CHECK(mean_ap({0.2, 0.4}) == doctest::Approx(0.3).epsilon(1e-12));
  std::mt19937_64 rng(5);
  std::vector<double> aps(20);
  double sum = 0.0;
  for (auto& a : aps) {
    a = testutil::u01(rng);
    sum += a;
  }
  CHECK(mean_ap(aps) == doctest::Approx(sum / 20.0).epsilon(1e-12));
  CHECK_THROWS_AS(mean_ap({}), ArgumentError);
}

TEST_CASE("top-k overlap") {
  RankedList a = list_of({"x", "y", "z", "w"});
  RankedList b = list_of({"y", "x", "q", "p"});
  CHECK(topk_overlap(a, a, 4) == 1.0);
  CHECK(topk_overlap(a, b, 2) == 1.0);
  CHECK(topk_overlap(a, b, 4) == 0.5);
  RankedList c = list_of({"m", "n"});
  CHECK(topk_overlap(a, c, 2) == 0.0);
}

TEST_CASE("analytic speedup formulas") {
  // Hand evaluation: 1 / (0.07 * 0.15 + 0.07 / 512).
  double expected = 1.0 / (0.07 * 0.15 + 0.07 / 512.0);
  CHECK(expected_speedup_unbiased(0.07, 0.15, 256, 256) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(expected - 94.0) < 0.5);

  // Fully dense inputs never beat brute force: intersection overhead remains.
  CHECK(expected_speedup_unbiased(1.0, 1.0, 64, 16) < 1.0);

  // Symmetric in the two sparsities.
  CHECK(expected_speedup_unbiased(0.07, 0.15, 256, 256) ==
        expected_speedup_unbiased(0.15, 0.07, 256, 256));

  CHECK(expected_speedup_biased(256, 2, 0.5, 0.1) == doctest::Approx(256.0 / 3.04).epsilon(1e-12));
  CHECK(expected_speedup_biased_dropped(256, 2, 0.1) ==
        doctest::Approx(256.0 / 2.54).epsilon(1e-12));
  double gain = expected_speedup_biased_dropped(256, 2, 0.1) /
                expected_speedup_biased(256, 2, 0.5, 0.1) - 1.0;
  CHECK(std::abs(gain - 0.197) < 0.005);  // the "about 20%" improvement

  // X = 0 and p_h = p_l both collapse to the square law.
  CHECK(expected_speedup_biased(128, 0, 0.9, 0.2) == doctest::Approx(1.0 / 0.04).epsilon(1e-12));
  CHECK(expected_speedup_biased(128, 16, 0.2, 0.2) == doctest::Approx(1.0 / 0.04).epsilon(1e-12));

  CHECK_THROWS_AS(expected_speedup_unbiased(0.0, 0.5, 16, 4), ArgumentError);
  CHECK_THROWS_AS(expected_speedup_unbiased(0.5, 1.5, 16, 4), ArgumentError);
  CHECK_THROWS_AS(expected_speedup_biased(16, 17, 0.5, 0.1), ArgumentError);
  CHECK_THROWS_AS(expected_speedup_biased(16, 0, 0.5, 0.0), ArgumentError);
  CHECK_THROWS_AS(expected_speedup_biased_dropped(16, 16, 0.1), ArgumentError);
}

TEST_CASE("synthetic galleries are deterministic and match their profile") {
  TempDir tmp;
  SparsityProfile p;
  p.K = 64;
  p.D = 4;
  p.M = 150;
  p.p_gallery = 0.2;
  p.p_query = 0.3;
  p.seed = 42;

  SynthResult a = synth_gallery(p);
  SynthResult b = synth_gallery(p);
  save_index(a.index, tmp / "a.idx");
  save_index(b.index, tmp / "b.idx");
  CHECK(testutil::slurp(tmp / "a.idx") == testutil::slurp(tmp / "b.idx"));
  CHECK(a.query.indices == b.query.indices);
  CHECK(a.query.blocks == b.query.blocks);

  CHECK(a.index.size() == 150);
  CHECK(a.stats.mean_block_occupancy == doctest::Approx(0.2).epsilon(0.25));
  CHECK(a.stats.gallery_blocks > 0);
  CHECK(a.stats.gallery_value_nonzeros >= a.stats.gallery_blocks);

  SparsityProfile q = p;
  q.seed = 43;
  SynthResult c = synth_gallery(q);
  save_index(c.index, tmp / "c.idx");
  CHECK(testutil::slurp(tmp / "a.idx") != testutil::slurp(tmp / "c.idx"));

  SUBCASE("full density fills every block") {
    SparsityProfile dense = p;
    dense.M = 10;
    dense.p_gallery = 1.0;
    dense.p_query = 1.0;
    SynthResult d = synth_gallery(dense);
    for (const auto& e : d.index.entries) CHECK(e.fv.nnz_blocks() == 64);
    CHECK(d.query.nnz_blocks() == 64);
  }
  SUBCASE("realized occupancy concentrates at the nominal rate") {
    SparsityProfile std_p;  // defaults: K=256, D=16, M=2000, 0.07/0.15
    SynthResult s = synth_gallery(std_p);
    CHECK(std::abs(s.stats.mean_block_occupancy - 0.07) < 0.005);
  }
  SUBCASE("profiles are validated") {
    SparsityProfile bad = p;
    bad.p_gallery = 0.0;
    CHECK_THROWS_AS(synth_gallery(bad), ArgumentError);
    bad = p;
    bad.biased = true;
    bad.hot_count = 0;
    CHECK_THROWS_AS(synth_gallery(bad), ArgumentError);
    bad = p;
    bad.biased = true;
    bad.hot_count = 65;
    CHECK_THROWS_AS(synth_gallery(bad), ArgumentError);
    bad = p;
    bad.biased = true;
    bad.hot_count = 2;
    bad.p_low = 0.0;
    CHECK_THROWS_AS(synth_gallery(bad), ArgumentError);
  }
}

TEST_CASE("biased profiles skew occupancy toward the hot codewords") {
  SparsityProfile p;
  p.K = 64;
  p.D = 4;
  p.M = 400;
  p.biased = true;
  p.hot_count = 2;
  p.p_hot = 0.5;
  p.p_low = 0.1;
  p.seed = 9;
  SynthResult s = synth_gallery(p);
  double hot_mean = (s.index.occupancy[0] + s.index.occupancy[1]) / 2.0;
  double low_mean = 0.0;
  for (std::uint32_t c = 2; c < 64; ++c) low_mean += s.index.occupancy[c];
  low_mean /= 62.0;
  CHECK(hot_mean > 3.0 * low_mean);

  // The drop heuristic naturally finds them.
  DropList drop = make_drop_list(s.index, 2);
  CHECK(drop.indices == std::vector<std::uint32_t>{0, 1});
}

TEST_CASE("bench method names round trip") {
  for (BenchMethod m : {BenchMethod::Naive, BenchMethod::SparseSide, BenchMethod::Ffp,
                        BenchMethod::FfpLossy, BenchMethod::Pq, BenchMethod::Hvsf})
    CHECK(parse_bench_method(bench_method_name(m)) == m);
  CHECK_THROWS_AS(parse_bench_method("turbo"), ArgumentError);
}

TEST_CASE("benchmark runs verify the lossless chain and report the model") {
  SparsityProfile p;
  p.K = 32;
  p.D = 4;
  p.M = 120;
  p.p_gallery = 0.15;
  p.p_query = 0.25;
  p.seed = 3;

  BenchReport r = run_bench(p, {BenchMethod::Naive, BenchMethod::SparseSide, BenchMethod::Ffp});
  CHECK(r.lossless_agree);
  REQUIRE(r.methods.size() == 3);
  CHECK(r.methods[0].ops.multiplies == 120ull * 2 * 32 * 4);
  CHECK(r.methods[0].checksum == r.methods[1].checksum);
  CHECK(r.methods[0].checksum == r.methods[2].checksum);
  CHECK(r.model_unbiased == expected_speedup_unbiased(0.15, 0.25, 32, 4));

  std::string table = format_bench_table(r);
  CHECK(table.find("lossless methods agree: yes") != std::string::npos);
  CHECK(table.find("combined (mult+probe) speedup") != std::string::npos);
  std::string kv = format_bench_kv(r);
  CHECK(kv.find("lossless_agree\t1") != std::string::npos);
  CHECK(kv.find("method.ffp.ops_combined\t") != std::string::npos);
  CHECK(kv.find("method.naive.multiplies\t") != std::string::npos);

  SUBCASE("lossy and baseline methods ride along") {
    BenchReport r2 = run_bench(p, {BenchMethod::Naive, BenchMethod::Ffp, BenchMethod::FfpLossy,
                                   BenchMethod::Pq, BenchMethod::Hvsf}, 2);
    CHECK(r2.lossless_agree);
    CHECK(r2.drop_r == 2);
    REQUIRE(r2.methods.size() == 5);
    const MethodReport* lossy = nullptr;
    for (const auto& m : r2.methods)
      if (m.name == "ffp-lossy") lossy = &m;
    REQUIRE(lossy != nullptr);
    CHECK(lossy->ops.multiplies <= r2.methods[1].ops.multiplies);
  }
}
