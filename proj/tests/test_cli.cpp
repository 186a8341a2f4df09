#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "helpers.hpp"

// Drives the installed binary like a user would: real processes, real files.
// VRFP_CLI_PATH and VRFP_TOY_DIR come from the build system.

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run_cli(const std::string& args, const fs::path& scratch) {
  fs::path out_file = scratch / "stdout.txt";
  std::string cmd = std::string(VRFP_CLI_PATH) + " " + args + " > " + out_file.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(out_file);
  r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  return r;
}

std::string toy(const char* name) { return (fs::path(VRFP_TOY_DIR) / name).string(); }

}  // namespace

TEST_CASE("argument errors exit with status 2") {
  testutil::TempDir tmp;
  CHECK(run_cli("", tmp.path).exit_code == 2);
  CHECK(run_cli("frobnicate", tmp.path).exit_code == 2);
  CHECK(run_cli("search --index missing.idx", tmp.path).exit_code == 2);  // no --query
  CHECK(run_cli("synth --k 0 --out-index " + (tmp / "i").string() + " --out-query " +
                    (tmp / "q").string(),
                tmp.path)
            .exit_code == 2);
  RunResult help = run_cli("--help", tmp.path);
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("search") != std::string::npos);
}

TEST_CASE("synth, search and stats round trip deterministically") {
  testutil::TempDir tmp;
  std::string synth_args = "synth --k 32 --d 4 --m 80 --p-t 0.2 --p-q 0.3 --seed 7 --out-index " +
                           (tmp / "g.idx").string() + " --out-query " + (tmp / "q.idx").string();
  REQUIRE(run_cli(synth_args, tmp.path).exit_code == 0);

  // Same seed, fresh files: byte-identical.
  std::string again = "synth --k 32 --d 4 --m 80 --p-t 0.2 --p-q 0.3 --seed 7 --out-index " +
                      (tmp / "g2.idx").string() + " --out-query " + (tmp / "q2.idx").string();
  REQUIRE(run_cli(again, tmp.path).exit_code == 0);
  CHECK(testutil::slurp(tmp / "g.idx") == testutil::slurp(tmp / "g2.idx"));
  CHECK(testutil::slurp(tmp / "q.idx") == testutil::slurp(tmp / "q2.idx"));

  std::string base = " --query " + (tmp / "q.idx").string() + " --index " + (tmp / "g.idx").string();
  REQUIRE(run_cli("search" + base + " --method ffp --out " + (tmp / "ffp.tsv").string(),
                  tmp.path)
              .exit_code == 0);
  REQUIRE(run_cli("search" + base + " --method naive --out " + (tmp / "naive.tsv").string(),
                  tmp.path)
              .exit_code == 0);
  REQUIRE(run_cli("search" + base + " --method sparse --out " + (tmp / "sparse.tsv").string(),
                  tmp.path)
              .exit_code == 0);
  auto ffp_bytes = testutil::slurp(tmp / "ffp.tsv");
  CHECK(ffp_bytes == testutil::slurp(tmp / "naive.tsv"));
  CHECK(ffp_bytes == testutil::slurp(tmp / "sparse.tsv"));

  REQUIRE(run_cli("search" + base + " --method ffp --out " + (tmp / "ffp2.tsv").string(),
                  tmp.path)
              .exit_code == 0);
  CHECK(ffp_bytes == testutil::slurp(tmp / "ffp2.tsv"));

  RunResult stats = run_cli("stats --index " + (tmp / "g.idx").string(), tmp.path);
  CHECK(stats.exit_code == 0);
  // One `<codeword>\t<occupancy>` line per codeword.
  std::size_t lines = 0;
  for (char c : stats.out)
    if (c == '\n') ++lines;
  CHECK(lines == 32);
  CHECK(stats.out.rfind("0\t", 0) == 0);

  SUBCASE("lossy search wants an explicit method") {
    CHECK(run_cli("search" + base + " --drop-r 2", tmp.path).exit_code == 2);
    CHECK(run_cli("search" + base + " --method ffp-lossy --drop-r 2", tmp.path).exit_code == 0);
  }
  SUBCASE("approximate methods run end to end") {
    CHECK(run_cli("search" + base + " --method pq --pq-m 4", tmp.path).exit_code == 0);
    CHECK(run_cli("search" + base + " --method hvsf --hvsf-f 0.5 --hvsf-r 80", tmp.path)
              .exit_code == 0);
  }
  SUBCASE("a truncated index is a data error") {
    auto bytes = testutil::slurp(tmp / "g.idx");
    bytes.resize(bytes.size() / 2);
    std::ofstream(tmp / "broken.idx", std::ios::binary)
        .write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK(run_cli("search --query " + (tmp / "q.idx").string() + " --index " +
                      (tmp / "broken.idx").string(),
                  tmp.path)
              .exit_code == 3);
  }
}

TEST_CASE("bench emits the analytic model and agreement flag") {
  testutil::TempDir tmp;
  RunResult r = run_cli(
      "bench --k 32 --d 4 --m 60 --p-t 0.2 --p-q 0.3 --seed 1 --methods naive,sparse,ffp --out " +
          (tmp / "kv.tsv").string(),
      tmp.path);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("lossless methods agree: yes") != std::string::npos);
  CHECK(r.out.find("model: unbiased op-count speedup") != std::string::npos);

  std::string kv(testutil::slurp(tmp / "kv.tsv").data(), testutil::slurp(tmp / "kv.tsv").size());
  CHECK(kv.find("lossless_agree\t1") != std::string::npos);
  CHECK(kv.find("method.ffp.ops_combined\t") != std::string::npos);

  CHECK(run_cli("bench --methods ffp-lossy --m 50", tmp.path).exit_code == 2);  // needs --drop-r
  CHECK(run_cli("bench --methods warp --m 50", tmp.path).exit_code == 2);
}

TEST_CASE("toy corpus pipeline is reproducible byte for byte") {
  testutil::TempDir tmp;
  std::string fit = "fit-codebook --manifest " + toy("manifest.tsv") + " --k 4 --no-pca --seed 3" +
                    " --out-prefix ";
  REQUIRE(run_cli(fit + (tmp / "cb").string(), tmp.path).exit_code == 0);
  REQUIRE(run_cli(fit + (tmp / "cb2").string(), tmp.path).exit_code == 0);
  CHECK(testutil::slurp(tmp / "cb.gmm") == testutil::slurp(tmp / "cb2.gmm"));
  CHECK(testutil::slurp(tmp / "cb.kms") == testutil::slurp(tmp / "cb2.kms"));

  std::string enc = "encode --manifest " + toy("manifest.tsv") + " --gmm " +
                    (tmp / "cb.gmm").string();
  REQUIRE(run_cli(enc + " --out " + (tmp / "gallery.idx").string(), tmp.path).exit_code == 0);
  REQUIRE(run_cli(enc + " --role query-images --out " + (tmp / "query.idx").string(), tmp.path)
              .exit_code == 0);

  std::string search = "search --query " + (tmp / "query.idx").string() + " --index " +
                       (tmp / "gallery.idx").string() + " --out ";
  REQUIRE(run_cli(search + (tmp / "r1.tsv").string(), tmp.path).exit_code == 0);
  REQUIRE(run_cli(search + (tmp / "r2.tsv").string(), tmp.path).exit_code == 0);
  auto ranked = testutil::slurp(tmp / "r1.tsv");
  CHECK(ranked == testutil::slurp(tmp / "r2.tsv"));

  // The query was drawn from video_a's feature cluster.
  std::string text(ranked.data(), ranked.size());
  CHECK(text.rfind("1\tvideo_a\t", 0) == 0);

  std::string rr = "rerank --initial " + (tmp / "r1.tsv").string() + " --index " +
                   (tmp / "gallery.idx").string() + " --top-n 1 --out ";
  REQUIRE(run_cli(rr + (tmp / "rr1.tsv").string(), tmp.path).exit_code == 0);
  REQUIRE(run_cli(rr + (tmp / "rr2.tsv").string(), tmp.path).exit_code == 0);
  CHECK(testutil::slurp(tmp / "rr1.tsv") == testutil::slurp(tmp / "rr2.tsv"));

  CHECK(run_cli("rerank --initial " + (tmp / "r1.tsv").string() + " --index " +
                    (tmp / "gallery.idx").string() + " --top-n 0",
                tmp.path)
            .exit_code == 2);

  SUBCASE("single-shot query subcommand agrees with the staged pipeline") {
    std::string q = "query --features " + toy("query.feat") + " --gmm " + (tmp / "cb.gmm").string() +
                    " --index " + (tmp / "gallery.idx").string() + " --no-rerank --out ";
    REQUIRE(run_cli(q + (tmp / "q1.tsv").string(), tmp.path).exit_code == 0);
    CHECK(testutil::slurp(tmp / "q1.tsv") == ranked);
  }
}
