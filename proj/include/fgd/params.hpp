#pragma once

#include <map>
#include <string>

#include "fgd/tensor.hpp"

namespace fgd::nn {

// Named parameter tensors with deterministic (sorted) iteration order.
// Serialized as a versioned text container, see save()/load().
class ParamStore {
public:
    using Map = std::map<std::string, Tensor>;

    void put(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return items_.count(name) > 0; }
    void erase(const std::string& name) { items_.erase(name); }
    std::size_t size() const { return items_.size(); }

    Map::const_iterator begin() const { return items_.begin(); }
    Map::const_iterator end() const { return items_.end(); }
    Map::iterator begin() { return items_.begin(); }
    Map::iterator end() { return items_.end(); }

    // Format: header "fgd-params v1", entry count, then per entry one line
    // "name rank d0 d1 ..." followed by one line of row-major values (%.17g,
    // space separated). Stable across runs for identical tensors.
    void save(const std::string& path) const;
    static ParamStore load(const std::string& path);

private:
    Map items_;
};

}  // namespace fgd::nn
