#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "jadce/params.hpp"
#include "jadce/tensor.hpp"

namespace jadce::io {

/// Shared on-disk container: a JSON header (format version, kind, free-form
/// metadata, array directory with shapes and byte offsets) followed by a flat
/// little-endian float64 payload. Datasets, trained parameter bundles and
/// optimized pilots all use it. Layout:
///
///   bytes 0..7    magic "JADCEC01"
///   bytes 8..15   uint64 LE: header JSON byte length H
///   bytes 16..    UTF-8 JSON header
///   16+H..        payload (doubles, LE, at the offsets the header declares)
class Container {
  public:
    Container();
    ~Container();
    Container(Container&&) noexcept;
    Container& operator=(Container&&) noexcept;
    Container(const Container&) = delete;
    Container& operator=(const Container&) = delete;

    static constexpr int FORMAT_VERSION = 1;

    std::string kind;

    nlohmann::json& meta();
    const nlohmann::json& meta() const;

    void add(const std::string& name, num::Tensor t);
    bool has(const std::string& name) const;
    const num::Tensor& get(const std::string& name) const;
    const std::vector<std::pair<std::string, num::Tensor>>& arrays() const { return arrays_; }

    void save(const std::string& path) const;
    static Container load(const std::string& path);

  private:
    std::vector<std::pair<std::string, num::Tensor>> arrays_;
    std::unique_ptr<nlohmann::json> meta_;
};

/// Parameter-bundle adapters (checkpoints share the container format; entry
/// order and trainable flags round-trip).
void save_bundle(const num::ParamBundle& bundle, const std::string& kind,
                 const nlohmann::json& extra_meta, const std::string& path);
struct LoadedBundle {
    num::ParamBundle params;
    std::string kind;
};
LoadedBundle load_bundle(const std::string& path);
nlohmann::json load_bundle_meta(const std::string& path);

}  // namespace jadce::io
