#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vrfp/errors.hpp"

namespace vrfp {

// One unordered collection of dense local features: the frames of a video or
// the web images of a query. Rows keep file order, but nothing downstream
// depends on it except subsampling.
struct FeatureBag {
  std::string id;
  std::uint32_t dim = 0;
  std::vector<float> data;  // row-major, count() * dim

  std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t t) const { return {data.data() + t * dim, dim}; }
};

enum class BagRole { QueryImages, VideoFrames, Background };

BagRole parse_role(const std::string& text);     // throws FormatError on unknown role
const char* role_name(BagRole role);

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;  // already resolved against the manifest directory
  BagRole role;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  std::uint32_t dim = 0;  // feature dimension shared by every referenced file
};

enum class SubsamplePolicy { TopFraction, UniformStride };

// Feature file: magic "VRFPFEAT", u32 version (=1), u32 d, u64 T, then T*d
// float32 values row-major. All integers and floats little-endian. The bag id
// is not stored; load_features uses the file stem and manifests override it.
FeatureBag load_features(const std::filesystem::path& path);
void write_features(const FeatureBag& bag, const std::filesystem::path& path);

// Rejects empty bags, dim 0, and non-finite values.
void validate_bag(const FeatureBag& bag);

// fraction in (0, 1]. TopFraction keeps the first ceil(fraction * T) rows,
// UniformStride keeps rows 0, s, 2s, ... with s = round(1 / fraction).
FeatureBag subsample_bag(const FeatureBag& bag, double fraction, SubsamplePolicy policy);

// Manifest: UTF-8 text, one "<id>\t<path>\t<role>" line per bag, role one of
// query-images | video-frames | background. Blank lines and lines starting
// with '#' are skipped. Relative paths resolve against the manifest's
// directory. Every file must exist and share one feature dimension; ids must
// be unique.
CorpusManifest load_manifest(const std::filesystem::path& path);

}  // namespace vrfp
