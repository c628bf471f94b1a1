#include "jadce/params.hpp"

#include "jadce/errors.hpp"

namespace jadce::num {

void ParamBundle::add(const std::string& path, Tensor value, bool trainable) {
    if (path.empty()) {
        throw ContractError("parameter path must be non-empty");
    }
    if (!index_.emplace(path, entries_.size()).second) {
        throw ContractError("duplicate parameter path: " + path);
    }
    entries_.push_back(Entry{path, std::move(value), trainable});
}

Tensor& ParamBundle::at(const std::string& path) {
    auto it = index_.find(path);
    if (it == index_.end()) {
        throw ContractError("unknown parameter path: " + path);
    }
    return entries_[it->second].value;
}

const Tensor& ParamBundle::at(const std::string& path) const {
    auto it = index_.find(path);
    if (it == index_.end()) {
        throw ContractError("unknown parameter path: " + path);
    }
    return entries_[it->second].value;
}

bool ParamBundle::trainable(const std::string& path) const {
    auto it = index_.find(path);
    if (it == index_.end()) {
        throw ContractError("unknown parameter path: " + path);
    }
    return entries_[it->second].trainable;
}

void ParamBundle::set_trainable(const std::string& path, bool trainable) {
    auto it = index_.find(path);
    if (it == index_.end()) {
        throw ContractError("unknown parameter path: " + path);
    }
    entries_[it->second].trainable = trainable;
}

std::vector<std::string> ParamBundle::trainable_paths() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.trainable) out.push_back(e.path);
    }
    return out;
}

std::size_t ParamBundle::trainable_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) {
        n += e.trainable ? 1 : 0;
    }
    return n;
}

bool ParamBundle::operator==(const ParamBundle& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const Entry& a = entries_[i];
        const Entry& b = o.entries_[i];
        if (a.path != b.path || a.trainable != b.trainable) return false;
        if (!a.value.same_shape(b.value) || a.value.raw() != b.value.raw()) return false;
    }
    return true;
}

}  // namespace jadce::num
