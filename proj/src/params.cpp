#include "fgd/params.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fgd/errors.hpp"

namespace fgd::nn {

void ParamStore::put(const std::string& name, Tensor t) {
    for (char c : name)
        if (std::isspace(static_cast<unsigned char>(c)))
            throw std::invalid_argument("ParamStore: name must not contain whitespace: " + name);
    items_[name] = std::move(t);
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = items_.find(name);
    if (it == items_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return it->second;
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << "fgd-params v1\n" << items_.size() << "\n";
    char buf[40];
    for (const auto& [name, t] : items_) {
        out << name << " " << t.rank();
        for (std::size_t d : t.shape) out << " " << d;
        out << "\n";
        for (std::size_t i = 0; i < t.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", t.data[i]);
            if (i) out << " ";
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path);
    std::string header;
    std::getline(in, header);
    if (header != "fgd-params v1") throw DataError("bad checkpoint header in " + path);
    std::size_t count = 0;
    in >> count;
    ParamStore store;
    for (std::size_t e = 0; e < count; ++e) {
        std::string name;
        std::size_t rank = 0;
        if (!(in >> name >> rank)) throw DataError("truncated checkpoint: " + path);
        std::vector<std::size_t> shape(rank);
        std::size_t n = 1;
        for (std::size_t& d : shape) {
            if (!(in >> d)) throw DataError("truncated checkpoint: " + path);
            n *= d;
        }
        Tensor t{std::move(shape), std::vector<double>(n)};
        for (double& v : t.data)
            if (!(in >> v)) throw DataError("truncated checkpoint values: " + path);
        store.put(name, std::move(t));
    }
    return store;
}

}  // namespace fgd::nn
