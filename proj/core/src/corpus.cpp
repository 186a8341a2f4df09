#include "vrfp/corpus.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "io_util.hpp"

namespace vrfp {

namespace {
constexpr char kFeatMagic[] = "VRFPFEAT";
constexpr std::uint32_t kFeatVersion = 1;
}  // namespace

BagRole parse_role(const std::string& text) {
  if (text == "query-images") return BagRole::QueryImages;
  if (text == "video-frames") return BagRole::VideoFrames;
  if (text == "background") return BagRole::Background;
  throw FormatError("unknown bag role '" + text + "'");
}

const char* role_name(BagRole role) {
  switch (role) {
    case BagRole::QueryImages: return "query-images";
    case BagRole::VideoFrames: return "video-frames";
    case BagRole::Background: return "background";
  }
  throw ArgumentError("invalid BagRole value");
}

FeatureBag load_features(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.expect_magic(kFeatMagic);
  std::uint32_t version = r.u32();
  if (version != kFeatVersion)
    throw FormatError(r.path() + ": unsupported feature file version " + std::to_string(version));
  FeatureBag bag;
  bag.id = path.stem().string();
  bag.dim = r.u32();
  std::uint64_t count = r.u64();
  if (bag.dim == 0) throw FormatError(r.path() + ": feature dimension is zero");
  if (count == 0) throw FormatError(r.path() + ": feature count is zero");
  bag.data.resize(static_cast<std::size_t>(count) * bag.dim);
  r.f32_array(bag.data.data(), bag.data.size());
  r.expect_eof();
  return bag;
}

void write_features(const FeatureBag& bag, const std::filesystem::path& path) {
  detail::Writer w(path, kFeatMagic);
  w.u32(kFeatVersion);
  w.u32(bag.dim);
  w.u64(bag.count());
  w.f32_array(bag.data.data(), bag.data.size());
  w.close();
}

void validate_bag(const FeatureBag& bag) {
  if (bag.dim == 0) throw DataError("bag '" + bag.id + "': dimension is zero");
  if (bag.data.empty()) throw DataError("bag '" + bag.id + "': no features");
  if (bag.data.size() % bag.dim != 0)
    throw DataError("bag '" + bag.id + "': data size not a multiple of dim");
  for (float v : bag.data)
    if (!std::isfinite(v)) throw DataError("bag '" + bag.id + "': non-finite feature value");
}

FeatureBag subsample_bag(const FeatureBag& bag, double fraction, SubsamplePolicy policy) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ArgumentError("subsample fraction must be in (0, 1]");
  validate_bag(bag);
  const std::size_t t = bag.count();
  FeatureBag out;
  out.id = bag.id;
  out.dim = bag.dim;
  if (policy == SubsamplePolicy::TopFraction) {
    std::size_t keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(t)));
    if (keep == 0) keep = 1;  // fraction > 0 on a non-empty bag keeps at least one row
    if (keep > t) keep = t;
    out.data.assign(bag.data.begin(), bag.data.begin() + keep * bag.dim);
  } else {
    std::size_t stride = static_cast<std::size_t>(std::lround(1.0 / fraction));
    if (stride == 0) stride = 1;
    for (std::size_t i = 0; i < t; i += stride)
      out.data.insert(out.data.end(), bag.data.begin() + i * bag.dim,
                      bag.data.begin() + (i + 1) * bag.dim);
  }
  return out;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  const std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";

  CorpusManifest m;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string id, rel, role_text;
    if (!std::getline(ls, id, '\t') || !std::getline(ls, rel, '\t') ||
        !std::getline(ls, role_text, '\t') || id.empty() || rel.empty())
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected <id>\\t<path>\\t<role>");
    if (!seen.insert(id).second)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + id + "'");

    ManifestEntry e;
    e.id = id;
    std::filesystem::path p(rel);
    e.path = p.is_absolute() ? p : base / p;
    e.role = parse_role(role_text);
    if (!std::filesystem::exists(e.path))
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": missing file " +
                      e.path.string());
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw DataError(path.string() + ": manifest lists no bags");

  // One pass over the headers pins the shared dimension without loading rows.
  for (const auto& e : m.entries) {
    detail::Reader r(e.path);
    r.expect_magic(kFeatMagic);
    std::uint32_t version = r.u32();
    if (version != kFeatVersion)
      throw FormatError(r.path() + ": unsupported feature file version " + std::to_string(version));
    std::uint32_t d = r.u32();
    if (d == 0) throw FormatError(r.path() + ": feature dimension is zero");
    if (m.dim == 0)
      m.dim = d;
    else if (d != m.dim)
      throw DataError(path.string() + ": mixed feature dimensions (" + std::to_string(m.dim) +
                      " vs " + std::to_string(d) + " in " + e.path.string() + ")");
  }
  return m;
}

}  // namespace vrfp
