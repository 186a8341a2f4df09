#include <doctest.h>

#include <fstream>

#include "helpers.hpp"

using namespace vrfp;
using testutil::TempDir;

TEST_CASE("feature file round trip is byte identical") {
  TempDir tmp;
  std::mt19937_64 rng(42);
  FeatureBag bag = testutil::random_bag("sample", 5, 17, rng);
  write_features(bag, tmp / "a.feat");
  FeatureBag back = load_features(tmp / "a.feat");
  CHECK(back.dim == bag.dim);
  CHECK(back.count() == bag.count());
  CHECK(back.data == bag.data);  // exact float equality, row order preserved
  CHECK(back.id == "a");         // id comes from the file stem

  write_features(back, tmp / "b.feat");
  CHECK(testutil::slurp(tmp / "a.feat") == testutil::slurp(tmp / "b.feat"));
}

TEST_CASE("feature loader rejects broken files") {
  TempDir tmp;
  {
    std::ofstream out(tmp / "bad.feat", std::ios::binary);
    out << "NOTMAGIC" << std::string(16, '\0');
  }
  CHECK_THROWS_AS(load_features(tmp / "bad.feat"), FormatError);

  std::mt19937_64 rng(1);
  FeatureBag bag = testutil::random_bag("x", 4, 3, rng);
  write_features(bag, tmp / "trunc.feat");
  {
    // Chop the last row off the payload.
    auto bytes = testutil::slurp(tmp / "trunc.feat");
    bytes.resize(bytes.size() - 7);
    std::ofstream out(tmp / "trunc.feat", std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_features(tmp / "trunc.feat"), FormatError);

  write_features(bag, tmp / "trail.feat");
  {
    std::ofstream out(tmp / "trail.feat", std::ios::binary | std::ios::app);
    out << "junk";
  }
  CHECK_THROWS_AS(load_features(tmp / "trail.feat"), FormatError);

  CHECK_THROWS_AS(load_features(tmp / "missing.feat"), FormatError);
}

TEST_CASE("validate_bag catches unusable bags") {
  FeatureBag ok = testutil::make_bag("ok", 2, {{1.0f, 2.0f}});
  CHECK_NOTHROW(validate_bag(ok));

  FeatureBag empty;
  empty.id = "empty";
  empty.dim = 3;
  CHECK_THROWS_AS(validate_bag(empty), DataError);

  FeatureBag nodim = testutil::make_bag("nodim", 0, {});
  CHECK_THROWS_AS(validate_bag(nodim), DataError);

  FeatureBag nan_bag = testutil::make_bag("nan", 2, {{1.0f, std::nanf("")}});
  CHECK_THROWS_AS(validate_bag(nan_bag), DataError);

  FeatureBag ragged = testutil::make_bag("ragged", 2, {{1.0f, 2.0f}});
  ragged.data.push_back(3.0f);
  CHECK_THROWS_AS(validate_bag(ragged), DataError);
}

TEST_CASE("subsampling keeps the declared rows") {
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 7; ++i) rows.push_back({static_cast<float>(i)});
  FeatureBag bag = testutil::make_bag("s", 1, rows);

  SUBCASE("top fraction keeps a prefix") {
    FeatureBag half = subsample_bag(bag, 0.5, SubsamplePolicy::TopFraction);
    CHECK(half.count() == 4);  // ceil(0.5 * 7)
    CHECK(half.data == std::vector<float>{0, 1, 2, 3});
  }
  SUBCASE("uniform stride walks the bag") {
    FeatureBag strided = subsample_bag(bag, 0.5, SubsamplePolicy::UniformStride);
    CHECK(strided.data == std::vector<float>{0, 2, 4, 6});
  }
  SUBCASE("fraction 1 keeps everything under both policies") {
    CHECK(subsample_bag(bag, 1.0, SubsamplePolicy::TopFraction).data == bag.data);
    CHECK(subsample_bag(bag, 1.0, SubsamplePolicy::UniformStride).data == bag.data);
  }
  SUBCASE("bad fractions are rejected") {
    CHECK_THROWS_AS(subsample_bag(bag, 0.0, SubsamplePolicy::TopFraction), ArgumentError);
    CHECK_THROWS_AS(subsample_bag(bag, 1.5, SubsamplePolicy::TopFraction), ArgumentError);
  }
}

TEST_CASE("manifest loading resolves paths and validates") {
  TempDir tmp;
  std::mt19937_64 rng(7);
  write_features(testutil::random_bag("q", 4, 5, rng), tmp / "q.feat");
  write_features(testutil::random_bag("v", 4, 6, rng), tmp / "v.feat");
  write_features(testutil::random_bag("bg", 4, 50, rng), tmp / "bg.feat");

  {
    std::ofstream out(tmp / "manifest.tsv");
    out << "# comment line\n";
    out << "query1\tq.feat\tquery-images\n";
    out << "video1\tv.feat\tvideo-frames\n";
    out << "\n";
    out << "bg1\tbg.feat\tbackground\n";
  }
  CorpusManifest m = load_manifest(tmp / "manifest.tsv");
  REQUIRE(m.entries.size() == 3);
  CHECK(m.dim == 4);
  CHECK(m.entries[0].id == "query1");
  CHECK(m.entries[0].role == BagRole::QueryImages);
  CHECK(m.entries[1].role == BagRole::VideoFrames);
  CHECK(m.entries[2].role == BagRole::Background);
  CHECK(std::filesystem::exists(m.entries[1].path));

  SUBCASE("duplicate ids are data errors") {
    std::ofstream out(tmp / "dup.tsv");
    out << "a\tq.feat\tquery-images\na\tv.feat\tvideo-frames\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "dup.tsv"), DataError);
  }
  SUBCASE("missing files are data errors") {
    std::ofstream out(tmp / "missing.tsv");
    out << "a\tnot_there.feat\tquery-images\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "missing.tsv"), DataError);
  }
  SUBCASE("unknown roles are format errors") {
    std::ofstream out(tmp / "role.tsv");
    out << "a\tq.feat\tfrobnicator\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "role.tsv"), FormatError);
  }
  SUBCASE("mixed dimensions are data errors") {
    write_features(testutil::random_bag("w", 3, 4, rng), tmp / "w.feat");
    std::ofstream out(tmp / "mixed.tsv");
    out << "a\tq.feat\tquery-images\nb\tw.feat\tvideo-frames\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "mixed.tsv"), DataError);
  }
  SUBCASE("short lines are format errors") {
    std::ofstream out(tmp / "short.tsv");
    out << "only_one_field\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "short.tsv"), FormatError);
  }
  SUBCASE("empty manifests are data errors") {
    std::ofstream out(tmp / "empty.tsv");
    out << "# nothing here\n";
    out.close();
    CHECK_THROWS_AS(load_manifest(tmp / "empty.tsv"), DataError);
  }
}

TEST_CASE("role names round trip") {
  for (BagRole r : {BagRole::QueryImages, BagRole::VideoFrames, BagRole::Background})
    CHECK(parse_role(role_name(r)) == r);
  CHECK_THROWS_AS(parse_role("nope"), FormatError);
}
