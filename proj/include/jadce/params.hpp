#pragma once

#include <map>
#include <string>
#include <vector>

#include "jadce/tensor.hpp"

namespace jadce::num {

/// Named collection of parameter tensors. Entries keep insertion order so
/// gradient vectors, optimizer slots and serialized checkpoints all share one
/// canonical alignment: the trainable entries in insertion order.
class ParamBundle {
  public:
    struct Entry {
        std::string path;
        Tensor value;
        bool trainable = true;
    };

    void add(const std::string& path, Tensor value, bool trainable = true);

    bool has(const std::string& path) const { return index_.count(path) != 0; }
    Tensor& at(const std::string& path);
    const Tensor& at(const std::string& path) const;

    bool trainable(const std::string& path) const;
    void set_trainable(const std::string& path, bool trainable);

    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    std::vector<std::string> trainable_paths() const;
    std::size_t trainable_count() const;

    bool operator==(const ParamBundle& o) const;

  private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace jadce::num
