#include "jadce/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>

#include "jadce/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container i/o assumes a little-endian host");

namespace jadce::io {

namespace {
constexpr char MAGIC[8] = {'J', 'A', 'D', 'C', 'E', 'C', '0', '1'};
}

Container::Container() : meta_(std::make_unique<nlohmann::json>(nlohmann::json::object())) {}
Container::~Container() = default;
Container::Container(Container&&) noexcept = default;
Container& Container::operator=(Container&&) noexcept = default;

nlohmann::json& Container::meta() {
    return *meta_;
}

const nlohmann::json& Container::meta() const {
    return *meta_;
}

void Container::add(const std::string& name, num::Tensor t) {
    if (has(name)) {
        throw ContractError("container: duplicate array name: " + name);
    }
    arrays_.emplace_back(name, std::move(t));
}

bool Container::has(const std::string& name) const {
    for (const auto& [n, _] : arrays_) {
        if (n == name) return true;
    }
    return false;
}

const num::Tensor& Container::get(const std::string& name) const {
    for (const auto& [n, t] : arrays_) {
        if (n == name) return t;
    }
    throw FormatError("container: missing array: " + name);
}

void Container::save(const std::string& path) const {
    nlohmann::json header;
    header["version"] = FORMAT_VERSION;
    header["kind"] = kind;
    header["meta"] = *meta_;
    nlohmann::json dir = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : arrays_) {
        nlohmann::json rec;
        rec["name"] = name;
        rec["shape"] = t.shape();
        rec["offset"] = offset;
        dir.push_back(std::move(rec));
        offset += static_cast<std::uint64_t>(t.size()) * sizeof(double);
    }
    header["arrays"] = std::move(dir);
    const std::string hs = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    out.write(MAGIC, sizeof(MAGIC));
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : arrays_) {
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

Container Container::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open for reading: " + path);
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, MAGIC, sizeof(MAGIC)) != 0) {
        throw FormatError("not a container file (bad magic): " + path);
    }
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    if (!in || hlen == 0 || hlen > (1ull << 30)) {
        throw FormatError("corrupt header length in " + path);
    }
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) {
        throw FormatError("truncated header in " + path);
    }
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) {
        throw FormatError("header is not valid JSON in " + path);
    }
    if (!header.contains("version") || !header["version"].is_number_integer()) {
        throw FormatError("header missing version field in " + path);
    }
    if (header["version"].get<int>() != FORMAT_VERSION) {
        throw VersionError("unsupported container version " +
                           std::to_string(header["version"].get<int>()) + " in " + path);
    }

    Container c;
    c.kind = header.value("kind", std::string{});
    *c.meta_ = header.value("meta", nlohmann::json::object());

    std::uint64_t expect_offset = 0;
    for (const auto& rec : header.value("arrays", nlohmann::json::array())) {
        const std::string name = rec.at("name").get<std::string>();
        const std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
        const std::uint64_t offset = rec.at("offset").get<std::uint64_t>();
        if (offset != expect_offset) {
            throw FormatError("array offset mismatch for '" + name + "' in " + path);
        }
        std::int64_t count = 1;
        for (int e : shape) {
            if (e <= 0) throw FormatError("non-positive extent for '" + name + "' in " + path);
            count *= e;
        }
        std::vector<double> data(static_cast<std::size_t>(count));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) {
            throw FormatError("payload shorter than declared shape for '" + name + "' in " +
                              path);
        }
        c.arrays_.emplace_back(name, num::Tensor(shape, std::move(data)));
        expect_offset += static_cast<std::uint64_t>(count) * sizeof(double);
    }
    return c;
}

void save_bundle(const num::ParamBundle& bundle, const std::string& kind,
                 const nlohmann::json& extra_meta, const std::string& path) {
    Container c;
    c.kind = kind;
    c.meta() = extra_meta;
    nlohmann::json frozen = nlohmann::json::array();
    for (const auto& e : bundle.entries()) {
        c.add(e.path, e.value);
        if (!e.trainable) frozen.push_back(e.path);
    }
    c.meta()["frozen"] = std::move(frozen);
    c.save(path);
}

LoadedBundle load_bundle(const std::string& path) {
    Container c = Container::load(path);
    LoadedBundle out;
    out.kind = c.kind;
    std::vector<std::string> frozen;
    if (c.meta().contains("frozen")) {
        frozen = c.meta()["frozen"].get<std::vector<std::string>>();
    }
    for (const auto& [name, t] : c.arrays()) {
        const bool is_frozen = std::find(frozen.begin(), frozen.end(), name) != frozen.end();
        out.params.add(name, t, !is_frozen);
    }
    return out;
}

nlohmann::json load_bundle_meta(const std::string& path) {
    return Container::load(path).meta();
}

}  // namespace jadce::io
