#include "rmi/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "rmi/error.hpp"

namespace rmi {

double Grid2D::max() const {
    double m = data.empty() ? 0.0 : data[0];
    for (double v : data) m = std::max(m, v);
    return m;
}

double Grid2D::min() const {
    double m = data.empty() ? 0.0 : data[0];
    for (double v : data) m = std::min(m, v);
    return m;
}

const std::string* GridHeader::find(const std::string& key) const {
    for (const auto& [k, v] : extra)
        if (k == key) return &v;
    return nullptr;
}

double GridHeader::get_num(const std::string& key) const {
    const std::string* v = find(key);
    if (!v) throw Error(ErrCode::missing_input, "grid-io", key, "header key not found: " + key);
    return std::stod(*v);
}

static std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void save_grid(const std::string& path_base, const Grid2D& g, const GridHeader& h) {
    {
        std::ofstream f(path_base + ".f32", std::ios::binary);
        if (!f) throw Error(ErrCode::missing_input, "grid-io", path_base + ".f32", "cannot open for write");
        std::vector<float> buf(g.size());
        for (size_t i = 0; i < g.size(); ++i) buf[i] = float(g.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
        if (!f) throw Error(ErrCode::missing_input, "grid-io", path_base + ".f32", "short write");
    }
    std::ofstream f(path_base + ".hdr");
    if (!f) throw Error(ErrCode::missing_input, "grid-io", path_base + ".hdr", "cannot open for write");
    f << "kind " << h.kind << "\n";
    f << "rows " << g.rows << "\n";
    f << "cols " << g.cols << "\n";
    f << "dr_um " << fmt_g17(h.dr_um) << "\n";
    f << "dz_um " << fmt_g17(h.dz_um) << "\n";
    f << "time_index " << h.time_index << "\n";
    f << "profile_id " << h.profile_id << "\n";
    f << "metal_mass_g " << fmt_g17(h.metal_mass_g) << "\n";
    if (!h.config_hash.empty()) f << "config_hash " << h.config_hash << "\n";
    for (const auto& [k, v] : h.extra) f << k << " " << v << "\n";
}

Grid2D load_grid(const std::string& path_base, GridHeader* header_out) {
    GridHeader h;
    {
        std::ifstream f(path_base + ".hdr");
        if (!f) throw Error(ErrCode::missing_input, "grid-io", path_base + ".hdr", "missing header");
        std::string line;
        while (std::getline(f, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto sp = line.find(' ');
            if (sp == std::string::npos) continue;
            const std::string key = line.substr(0, sp);
            const std::string val = line.substr(sp + 1);
            if (key == "kind") h.kind = val;
            else if (key == "rows") h.rows = std::stoi(val);
            else if (key == "cols") h.cols = std::stoi(val);
            else if (key == "dr_um") h.dr_um = std::stod(val);
            else if (key == "dz_um") h.dz_um = std::stod(val);
            else if (key == "time_index") h.time_index = std::stoi(val);
            else if (key == "profile_id") h.profile_id = std::stoi(val);
            else if (key == "metal_mass_g") h.metal_mass_g = std::stod(val);
            else if (key == "config_hash") h.config_hash = val;
            else h.extra.emplace_back(key, val);
        }
    }
    if (h.rows <= 0 || h.cols <= 0)
        throw Error(ErrCode::missing_input, "grid-io", path_base + ".hdr", "bad shape in header");
    Grid2D g(h.rows, h.cols);
    std::ifstream f(path_base + ".f32", std::ios::binary);
    if (!f) throw Error(ErrCode::missing_input, "grid-io", path_base + ".f32", "missing grid data");
    std::vector<float> buf(g.size());
    f.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float)));
    if (size_t(f.gcount()) != buf.size() * sizeof(float))
        throw Error(ErrCode::missing_input, "grid-io", path_base + ".f32", "short read");
    for (size_t i = 0; i < g.size(); ++i) g.data[i] = buf[i];
    if (header_out) *header_out = h;
    return g;
}

uint64_t fnv1a64(const void* data, size_t n, uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t hash = seed;
    for (size_t i = 0; i < n; ++i) {
        hash ^= p[i];
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace rmi
