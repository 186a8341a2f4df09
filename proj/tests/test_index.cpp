#include <doctest.h>

#include <fstream>

#include "helpers.hpp"

using namespace vrfp;
using testutil::TempDir;

namespace {

std::vector<IndexedEntry> sample_entries(std::uint32_t K, std::uint32_t D, std::size_t m,
                                         double p, std::mt19937_64& rng) {
  std::vector<IndexedEntry> entries;
  for (std::size_t i = 0; i < m; ++i) {
    IndexedEntry e;
    e.id = "v" + std::to_string(i);
    e.fv = testutil::random_sparse(K, D, p, kDefaultShrinkThreshold, rng);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

TEST_CASE("build_index recounts occupancy and validates entries") {
  std::mt19937_64 rng(7);
  auto entries = sample_entries(6, 2, 10, 0.5, rng);
  GalleryIndex idx = build_index(6, 2, kDefaultShrinkThreshold, entries);
  REQUIRE(idx.occupancy.size() == 6);

  std::vector<std::uint32_t> recount(6, 0);
  for (const auto& e : idx.entries)
    for (std::uint32_t c : e.fv.indices) recount[c]++;
  CHECK(idx.occupancy == recount);
  CHECK(idx.size() == 10);

  SUBCASE("duplicate ids rejected") {
    auto dup = entries;
    dup[1].id = dup[0].id;
    CHECK_THROWS_AS(build_index(6, 2, kDefaultShrinkThreshold, dup), DataError);
  }
  SUBCASE("empty id rejected") {
    auto bad = entries;
    bad[0].id.clear();
    CHECK_THROWS_AS(build_index(6, 2, kDefaultShrinkThreshold, bad), DataError);
  }
  SUBCASE("dimension mismatch rejected") {
    CHECK_THROWS_AS(build_index(7, 2, kDefaultShrinkThreshold, entries), ArgumentError);
    CHECK_THROWS_AS(build_index(6, 3, kDefaultShrinkThreshold, entries), ArgumentError);
  }
  SUBCASE("threshold mismatch rejected") {
    CHECK_THROWS_AS(build_index(6, 2, 0.5f, entries), ArgumentError);
  }
  SUBCASE("malformed sparse payload rejected") {
    auto bad = entries;
    REQUIRE(bad[0].fv.indices.size() >= 2);
    std::swap(bad[0].fv.indices[0], bad[0].fv.indices[1]);
    CHECK_THROWS_AS(build_index(6, 2, kDefaultShrinkThreshold, bad), DataError);
  }
  SUBCASE("empty index is valid") {
    GalleryIndex empty = build_index(6, 2, kDefaultShrinkThreshold, {});
    CHECK(empty.size() == 0);
    CHECK(empty.occupancy == std::vector<std::uint32_t>(6, 0));
  }
}

TEST_CASE("index files round trip bit-exactly") {
  TempDir tmp;
  std::mt19937_64 rng(13);
  GalleryIndex idx = build_index(8, 2, kDefaultShrinkThreshold, sample_entries(8, 2, 12, 0.4, rng));

  save_index(idx, tmp / "g.idx");
  GalleryIndex back = load_index(tmp / "g.idx");
  CHECK(back.K == idx.K);
  CHECK(back.D == idx.D);
  CHECK(back.threshold == idx.threshold);
  CHECK(back.occupancy == idx.occupancy);
  REQUIRE(back.size() == idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    CHECK(back.entries[i].id == idx.entries[i].id);
    CHECK(back.entries[i].fv.indices == idx.entries[i].fv.indices);
    CHECK(back.entries[i].fv.blocks == idx.entries[i].fv.blocks);
  }
  save_index(back, tmp / "g2.idx");
  CHECK(testutil::slurp(tmp / "g.idx") == testutil::slurp(tmp / "g2.idx"));

  GalleryIndex empty = build_index(4, 1, kDefaultShrinkThreshold, {});
  save_index(empty, tmp / "e.idx");
  GalleryIndex eback = load_index(tmp / "e.idx");
  CHECK(eback.size() == 0);
  CHECK(eback.K == 4);
}

TEST_CASE("index loader rejects damaged files") {
  TempDir tmp;
  std::mt19937_64 rng(17);
  GalleryIndex idx = build_index(8, 2, kDefaultShrinkThreshold, sample_entries(8, 2, 5, 0.5, rng));
  save_index(idx, tmp / "g.idx");
  auto bytes = testutil::slurp(tmp / "g.idx");

  SUBCASE("wrong magic") {
    auto bad = bytes;
    bad[0] = 'X';
    std::ofstream(tmp / "bad.idx", std::ios::binary)
        .write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_index(tmp / "bad.idx"), FormatError);
  }
  SUBCASE("truncation") {
    auto bad = bytes;
    bad.resize(bad.size() - 3);
    std::ofstream(tmp / "cut.idx", std::ios::binary)
        .write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_index(tmp / "cut.idx"), FormatError);
  }
  SUBCASE("trailing junk") {
    auto bad = bytes;
    bad.push_back('\0');
    std::ofstream(tmp / "junk.idx", std::ios::binary)
        .write(bad.data(), static_cast<std::streamsize>(bad.size()));
    CHECK_THROWS_AS(load_index(tmp / "junk.idx"), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_index(tmp / "none.idx"), FormatError); }
}

TEST_CASE("drop list picks the busiest codewords") {
  // Hand-build entries hitting codewords with occupancy 3, 2, 2, 1, 0.
  auto block_at = [](std::uint32_t K, std::vector<std::uint32_t> idxs) {
    SparseFV s;
    s.K = K;
    s.D = 1;
    s.threshold = kDefaultShrinkThreshold;
    s.indices = std::move(idxs);
    s.blocks.assign(s.indices.size() * 2, 0.5f);
    return s;
  };
  std::vector<IndexedEntry> entries;
  entries.push_back({"a", block_at(5, {0, 1})});
  entries.push_back({"b", block_at(5, {0, 2})});
  entries.push_back({"c", block_at(5, {0, 1, 2, 3})});
  GalleryIndex idx = build_index(5, 1, kDefaultShrinkThreshold, entries);
  CHECK(idx.occupancy == std::vector<std::uint32_t>{3, 2, 2, 1, 0});

  CHECK(make_drop_list(idx, 0).indices.empty());
  CHECK(make_drop_list(idx, 1).indices == std::vector<std::uint32_t>{0});
  // Tie between codewords 1 and 2 resolves toward the lower id.
  CHECK(make_drop_list(idx, 2).indices == std::vector<std::uint32_t>{0, 1});
  CHECK(make_drop_list(idx, 4).indices == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(make_drop_list(idx, 6), ArgumentError);
}

TEST_CASE("codeword histogram counts firing features") {
  GmmCodebook cb;
  cb.K = 3;
  cb.D = 1;
  cb.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  cb.means = {-50.0, 0.0, 50.0};
  cb.variances = {1.0, 1.0, 1.0};
  FeatureBag bag = testutil::make_bag("b", 1, {{0.1f}, {-0.3f}, {0.2f}, {49.9f}});
  auto hist = codeword_histogram(cb, bag);
  CHECK(hist == std::vector<std::uint32_t>{0, 3, 1});

  FeatureBag wrong = testutil::make_bag("w", 2, {{0.1f, 0.2f}});
  CHECK_THROWS_AS(codeword_histogram(cb, wrong), ArgumentError);
}
