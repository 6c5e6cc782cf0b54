#pragma once

// Text mask files: a short header followed by run-length-encoded cell
// indices ("start length" per line, ascending).
//
//   lqg-mask 1
//   n 1024
//   kind segment
//   edge none
//   known_x 0.5
//   runs 1
//   524544 512

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lqg/boundary.hpp"
#include "lqg/fractal.hpp"

namespace lqg::io {

struct Run {
    std::size_t start = 0;
    std::size_t length = 0;
};

inline std::vector<Run> encode_runs(const std::vector<std::size_t>& sorted_cells) {
    std::vector<Run> runs;
    for (std::size_t c : sorted_cells) {
        if (!runs.empty() && runs.back().start + runs.back().length == c) {
            ++runs.back().length;
        } else {
            runs.push_back({c, 1});
        }
    }
    return runs;
}

inline std::vector<std::size_t> decode_runs(const std::vector<Run>& runs) {
    std::vector<std::size_t> cells;
    for (const auto& r : runs)
        for (std::size_t k = 0; k < r.length; ++k) cells.push_back(r.start + k);
    return cells;
}

struct MaskRecord {
    int n = 0;
    std::string kind;
    std::string edge = "none";
    std::optional<double> known_x;
    std::vector<std::size_t> cells;
};

inline std::string format_mask(const MaskRecord& m) {
    std::ostringstream out;
    out << "lqg-mask 1\n";
    out << "n " << m.n << "\n";
    out << "kind " << m.kind << "\n";
    out << "edge " << m.edge << "\n";
    if (m.known_x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *m.known_x);
        out << "known_x " << buf << "\n";
    }
    const auto runs = encode_runs(m.cells);
    out << "runs " << runs.size() << "\n";
    for (const auto& r : runs) out << r.start << " " << r.length << "\n";
    return out.str();
}

inline MaskRecord parse_mask(std::istream& in) {
    MaskRecord m;
    std::string tag;
    int version = 0;
    if (!(in >> tag >> version) || tag != "lqg-mask" || version != 1) throw std::runtime_error("mask file: bad header");
    std::size_t n_runs = 0;
    bool have_runs = false;
    while (!have_runs && in >> tag) {
        if (tag == "n") in >> m.n;
        else if (tag == "kind") in >> m.kind;
        else if (tag == "edge") in >> m.edge;
        else if (tag == "known_x") {
            double x;
            in >> x;
            m.known_x = x;
        } else if (tag == "runs") {
            in >> n_runs;
            have_runs = true;
        } else {
            throw std::runtime_error("mask file: unknown field '" + tag + "'");
        }
        if (!in) throw std::runtime_error("mask file: malformed field '" + tag + "'");
    }
    if (!have_runs) throw std::runtime_error("mask file: missing runs");
    std::vector<Run> runs(n_runs);
    for (auto& r : runs)
        if (!(in >> r.start >> r.length)) throw std::runtime_error("mask file: truncated run list");
    m.cells = decode_runs(runs);
    return m;
}

inline MaskRecord to_record(const FractalMask& m) {
    return {m.grid.n, to_string(m.kind), "none", m.known_x, m.cells};
}

inline MaskRecord to_record(const BoundaryMask& m) {
    return {m.grid.n, to_string(m.kind), to_string(m.edge), m.known_x,
            std::vector<std::size_t>(m.cells.begin(), m.cells.end())};
}

inline FractalMask fractal_from_record(const MaskRecord& r, BoundaryCondition bc = BoundaryCondition::dirichlet) {
    if (r.edge != "none") throw std::runtime_error("mask file holds a boundary mask");
    FractalMask m;
    m.grid = Grid(r.n, bc);
    m.kind = mask_kind_from_string(r.kind);
    m.known_x = r.known_x;
    m.cells = r.cells;
    for (std::size_t c : m.cells)
        if (c >= m.grid.size()) throw std::runtime_error("mask file: cell index out of range");
    return m;
}

inline BoundaryMask boundary_from_record(const MaskRecord& r) {
    BoundaryMask m;
    m.grid = Grid(r.n, BoundaryCondition::free);
    m.edge = edge_from_string(r.edge);
    m.kind = mask_kind_from_string(r.kind);
    m.known_x = r.known_x;
    for (std::size_t c : r.cells) {
        if (c >= static_cast<std::size_t>(r.n)) throw std::runtime_error("mask file: cell index out of range");
        m.cells.push_back(static_cast<int>(c));
    }
    return m;
}

template <class Mask>
void write_mask(const std::string& path, const Mask& mask) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << format_mask(to_record(mask));
}

inline MaskRecord read_mask(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return parse_mask(in);
}

}  // namespace lqg::io
