#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dynmln/text.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Observed cell states: 0 / 1 / -1 (missing).
constexpr int8_t kMissing = -1;

// One dynamic multilayer network on a common time grid.  Only the lower
// triangle (v > u) is stored; accessors fold symmetric queries onto it.
struct DynMultiNet {
  int V = 0;
  int K = 0;
  int n = 0;
  Vector grid;               // size n, strictly increasing
  std::vector<int8_t> obs;   // K*n*pairs, flat (k,i,pair) order

  Dims dims() const { return {V, K, n}; }

  long flat(int k, int i, int v, int u) const {
    return dims().flat(k, i, pair_index(std::max(v, u), std::min(v, u)));
  }

  int8_t at(int k, int i, int v, int u) const { return obs[flat(k, i, v, u)]; }
  void set(int k, int i, int v, int u, int8_t val) { obs[flat(k, i, v, u)] = val; }

  void validate() const {
    if (V < 2) throw data_error("network needs at least 2 actors");
    if (K < 1) throw data_error("network needs at least 1 layer");
    if (n < 1) throw data_error("network needs at least 1 time point");
    if (grid.size() != n) throw data_error("grid length does not match time count");
    for (int i = 0; i + 1 < n; ++i)
      if (!(grid[i] < grid[i + 1]))
        throw data_error("time grid must be strictly increasing");
    if (static_cast<long>(obs.size()) != dims().cells())
      throw data_error("cell storage size mismatch");
    for (int8_t v : obs)
      if (v != 0 && v != 1 && v != kMissing)
        throw data_error("cell values must be 0, 1 or missing");
  }

  static DynMultiNet zeros(int V, int K, int n, Vector grid) {
    DynMultiNet net;
    net.V = V;
    net.K = K;
    net.n = n;
    net.grid = std::move(grid);
    net.obs.assign(Dims{V, K, n}.cells(), 0);
    net.validate();
    return net;
  }
};

enum class NetFormat { EdgeCsv, DenseCsv };

inline NetFormat parse_format(const std::string& s) {
  if (s == "edge-csv") return NetFormat::EdgeCsv;
  if (s == "dense-csv") return NetFormat::DenseCsv;
  throw config_error("unknown network format '" + s + "' (expected edge-csv or dense-csv)");
}

namespace net_detail {

struct HeaderInfo {
  int V = 0;
  int K = 0;
  Vector grid;
};

// "#dynmln v=<V> k=<K> grid=<t1,t2,...>"
inline HeaderInfo parse_header_line(const std::string& line, const std::string& where) {
  const std::string t = trim(line);
  if (t.rfind("#dynmln", 0) != 0)
    throw data_error(where + ": first line must start with '#dynmln'");
  HeaderInfo h;
  bool have_v = false, have_k = false, have_grid = false;
  std::istringstream iss(t.substr(7));
  std::string tok;
  while (iss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw data_error(where + ": malformed header token '" + tok + "'");
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "v") {
      h.V = static_cast<int>(parse_int(val, "actor count"));
      have_v = true;
    } else if (key == "k") {
      h.K = static_cast<int>(parse_int(val, "layer count"));
      have_k = true;
    } else if (key == "grid") {
      const auto parts = split(val, ',');
      h.grid.resize(static_cast<Eigen::Index>(parts.size()));
      for (size_t i = 0; i < parts.size(); ++i)
        h.grid[static_cast<Eigen::Index>(i)] = parse_double(parts[i], "grid value");
      have_grid = true;
    } else {
      throw data_error(where + ": unknown header key '" + key + "'");
    }
  }
  if (!have_v || !have_k || !have_grid)
    throw data_error(where + ": header must carry v=, k= and grid=");
  return h;
}

inline std::string header_line(const DynMultiNet& net) {
  std::string s = "#dynmln v=" + std::to_string(net.V) + " k=" + std::to_string(net.K) + " grid=";
  for (int i = 0; i < net.n; ++i) {
    if (i) s += ',';
    s += fmt_double(net.grid[i]);
  }
  return s;
}

inline int8_t parse_cell_token(const std::string& tok, const std::string& where) {
  const std::string t = trim(tok);
  if (t == "0") return 0;
  if (t == "1") return 1;
  if (t == "NA") return kMissing;
  throw data_error(where + ": cell value must be 0, 1 or NA, got '" + tok + "'");
}

inline std::string cell_token(int8_t v) {
  return v == kMissing ? "NA" : std::to_string(static_cast<int>(v));
}

}  // namespace net_detail

// --- edge-csv ---------------------------------------------------------------
// Sparse format: header line, column line "layer,time_index,u,v,value", then
// one row per explicitly listed cell (1-based indices).  Unlisted cells are 0.

inline DynMultiNet load_edge_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw data_error(path + ": empty file");
  const auto h = net_detail::parse_header_line(line, path);
  if (!std::getline(in, line)) throw data_error(path + ": missing column header");
  {
    auto cols = split(trim(line), ',');
    for (auto& c : cols) c = trim(c);
    const std::vector<std::string> want = {"layer", "time_index", "u", "v", "value"};
    if (std::vector<std::string>(cols.begin(), cols.end()) != want)
      throw data_error(path + ": column header must be 'layer,time_index,u,v,value'");
  }
  DynMultiNet net = DynMultiNet::zeros(h.V, h.K, static_cast<int>(h.grid.size()), h.grid);
  std::vector<uint8_t> seen(net.obs.size(), 0);
  long lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = split(t, ',');
    if (f.size() != 5) throw data_error(where + ": expected 5 fields");
    const long k = parse_int(f[0], "layer");
    const long ti = parse_int(f[1], "time_index");
    const long a = parse_int(f[2], "u");
    const long b = parse_int(f[3], "v");
    if (k < 1 || k > net.K) throw data_error(where + ": layer out of range");
    if (ti < 1 || ti > net.n) throw data_error(where + ": time_index out of range");
    if (a < 1 || a > net.V || b < 1 || b > net.V)
      throw data_error(where + ": actor index out of range");
    if (a == b) throw data_error(where + ": self-loops are not representable");
    const int8_t val = net_detail::parse_cell_token(f[4], where);
    const long idx = net.flat(static_cast<int>(k - 1), static_cast<int>(ti - 1),
                              static_cast<int>(b - 1), static_cast<int>(a - 1));
    if (seen[idx] && net.obs[idx] != val)
      throw data_error(where + ": conflicting duplicate entry for this cell");
    seen[idx] = 1;
    net.obs[idx] = val;
  }
  net.validate();
  return net;
}

inline void write_edge_csv(const DynMultiNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << net_detail::header_line(net) << "\n";
  out << "layer,time_index,u,v,value\n";
  // zero cells are implied by omission
  for (int k = 0; k < net.K; ++k)
    for (int i = 0; i < net.n; ++i)
      for (int v = 1; v < net.V; ++v)
        for (int u = 0; u < v; ++u) {
          const int8_t val = net.at(k, i, v, u);
          if (val == 0) continue;
          out << (k + 1) << ',' << (i + 1) << ',' << (u + 1) << ',' << (v + 1)
              << ',' << net_detail::cell_token(val) << "\n";
        }
  if (!out) throw data_error("write failed for '" + path + "'");
}

// --- dense-csv --------------------------------------------------------------
// Directory format: manifest.txt carries the header line; each (layer, time)
// slice is a full symmetric V x V matrix in Y_k<layer>_t<time>.csv.

inline std::string dense_slice_name(int k, int i) {
  return "Y_k" + std::to_string(k + 1) + "_t" + std::to_string(i + 1) + ".csv";
}

inline DynMultiNet load_dense_csv(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  const fs::path mani = root / "manifest.txt";
  std::ifstream min(mani);
  if (!min) throw data_error("cannot open '" + mani.string() + "'");
  std::string line;
  if (!std::getline(min, line)) throw data_error(mani.string() + ": empty manifest");
  const auto h = net_detail::parse_header_line(line, mani.string());
  DynMultiNet net = DynMultiNet::zeros(h.V, h.K, static_cast<int>(h.grid.size()), h.grid);
  for (int k = 0; k < net.K; ++k)
    for (int i = 0; i < net.n; ++i) {
      const fs::path p = root / dense_slice_name(k, i);
      std::ifstream in(p);
      if (!in) throw data_error("cannot open '" + p.string() + "'");
      std::vector<std::vector<int8_t>> m(net.V, std::vector<int8_t>(net.V, 0));
      for (int r = 0; r < net.V; ++r) {
        if (!std::getline(in, line))
          throw data_error(p.string() + ": expected " + std::to_string(net.V) + " rows");
        const auto f = split(trim(line), ',');
        if (static_cast<int>(f.size()) != net.V)
          throw data_error(p.string() + ":" + std::to_string(r + 1) + ": expected " +
                           std::to_string(net.V) + " columns");
        for (int c = 0; c < net.V; ++c)
          m[r][c] = net_detail::parse_cell_token(f[c], p.string() + ":" + std::to_string(r + 1));
      }
      for (int v = 1; v < net.V; ++v)
        for (int u = 0; u < v; ++u) {
          if (m[v][u] != m[u][v])
            throw data_error(p.string() + ": asymmetric entry at (" +
                             std::to_string(u + 1) + "," + std::to_string(v + 1) + ")");
          net.set(k, i, v, u, m[v][u]);
        }
    }
  net.validate();
  return net;
}

inline void write_dense_csv(const DynMultiNet& net, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  std::ofstream mout(root / "manifest.txt");
  if (!mout) throw data_error("cannot write dense manifest in '" + dir + "'");
  mout << net_detail::header_line(net) << "\n";
  for (int k = 0; k < net.K; ++k)
    for (int i = 0; i < net.n; ++i) {
      const fs::path p = root / dense_slice_name(k, i);
      std::ofstream out(p);
      if (!out) throw data_error("cannot write '" + p.string() + "'");
      for (int r = 0; r < net.V; ++r) {
        for (int c = 0; c < net.V; ++c) {
          if (c) out << ',';
          out << (r == c ? std::string("0") : net_detail::cell_token(net.at(k, i, r, c)));
        }
        out << "\n";
      }
      if (!out) throw data_error("write failed for '" + p.string() + "'");
    }
}

inline DynMultiNet load_network(const std::string& path, NetFormat fmt) {
  return fmt == NetFormat::EdgeCsv ? load_edge_csv(path) : load_dense_csv(path);
}

inline void write_network(const DynMultiNet& net, const std::string& path, NetFormat fmt) {
  if (fmt == NetFormat::EdgeCsv)
    write_edge_csv(net, path);
  else
    write_dense_csv(net, path);
}

// --- holdout ----------------------------------------------------------------
// Selector text, one per line:
//   layer=<k> times=<a>..<b> [pairs=all|(u,v);(u,v);...]
// Indices 1-based; pairs defaults to all.

struct HoldoutSelector {
  int layer = 0;                          // 0-based
  int t_begin = 0, t_end = 0;             // 0-based inclusive
  bool all_pairs = true;
  std::vector<std::pair<int, int>> pairs; // 0-based (v,u), v > u
};

struct HoldoutSpec {
  std::vector<HoldoutSelector> selectors;

  static HoldoutSpec parse(const std::string& text) {
    HoldoutSpec spec;
    long lineno = 0;
    for (const auto& raw : split(text, '\n')) {
      ++lineno;
      const std::string line = trim(raw);
      if (line.empty() || line[0] == '#') continue;
      const std::string where = "holdout line " + std::to_string(lineno);
      HoldoutSelector sel;
      bool have_layer = false, have_times = false;
      std::istringstream iss(line);
      std::string tok;
      while (iss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
          throw data_error(where + ": malformed token '" + tok + "'");
        const std::string key = tok.substr(0, eq);
        const std::string val = tok.substr(eq + 1);
        if (key == "layer") {
          sel.layer = static_cast<int>(parse_int(val, "holdout layer")) - 1;
          have_layer = true;
        } else if (key == "times") {
          const auto dots = val.find("..");
          long a, b;
          if (dots == std::string::npos) {
            a = b = parse_int(val, "holdout time");
          } else {
            a = parse_int(val.substr(0, dots), "holdout time");
            b = parse_int(val.substr(dots + 2), "holdout time");
          }
          if (a > b) throw data_error(where + ": empty time range");
          sel.t_begin = static_cast<int>(a) - 1;
          sel.t_end = static_cast<int>(b) - 1;
          have_times = true;
        } else if (key == "pairs") {
          if (val == "all") {
            sel.all_pairs = true;
          } else {
            sel.all_pairs = false;
            for (const auto& ps : split(val, ';')) {
              const std::string p = trim(ps);
              if (p.size() < 5 || p.front() != '(' || p.back() != ')')
                throw data_error(where + ": malformed pair '" + ps + "'");
              const auto uv = split(p.substr(1, p.size() - 2), ',');
              if (uv.size() != 2)
                throw data_error(where + ": malformed pair '" + ps + "'");
              const long a = parse_int(uv[0], "pair actor");
              const long b = parse_int(uv[1], "pair actor");
              if (a == b) throw data_error(where + ": pair with identical actors");
              sel.pairs.emplace_back(static_cast<int>(std::max(a, b)) - 1,
                                     static_cast<int>(std::min(a, b)) - 1);
            }
            if (sel.pairs.empty()) throw data_error(where + ": empty pair list");
          }
        } else {
          throw data_error(where + ": unknown key '" + key + "'");
        }
      }
      if (!have_layer || !have_times)
        throw data_error(where + ": selector needs layer= and times=");
      spec.selectors.push_back(std::move(sel));
    }
    return spec;
  }

  static HoldoutSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open holdout spec '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }
};

// Held-out cell with its true observed value.
struct TruthCell {
  CellRef cell;
  int8_t value = 0;
};

struct HoldoutResult {
  DynMultiNet masked;
  std::vector<TruthCell> truth;          // deterministic (k,i,v,u) order per selector
  std::vector<std::string> warnings;
};

inline HoldoutResult apply_holdout(const DynMultiNet& net, const HoldoutSpec& spec) {
  HoldoutResult res;
  res.masked = net;
  std::vector<uint8_t> claimed(net.obs.size(), 0);
  int selno = 0;
  for (const auto& sel : spec.selectors) {
    ++selno;
    const std::string where = "holdout selector " + std::to_string(selno);
    if (sel.layer < 0 || sel.layer >= net.K)
      throw data_error(where + ": layer out of range");
    if (sel.t_begin < 0 || sel.t_end >= net.n)
      throw data_error(where + ": time range out of range");
    for (const auto& [v, u] : sel.pairs)
      if (v >= net.V || u < 0) throw data_error(where + ": pair out of range");
    long added = 0;
    auto take = [&](int i, int v, int u) {
      const long idx = res.masked.flat(sel.layer, i, v, u);
      if (claimed[idx]) return;               // earlier selector already masked it
      if (net.obs[idx] == kMissing) return;   // never observed, nothing to score
      claimed[idx] = 1;
      res.truth.push_back({{sel.layer, i, v, u}, net.obs[idx]});
      res.masked.obs[idx] = kMissing;
      ++added;
    };
    for (int i = sel.t_begin; i <= sel.t_end; ++i) {
      if (sel.all_pairs) {
        for (int v = 1; v < net.V; ++v)
          for (int u = 0; u < v; ++u) take(i, v, u);
      } else {
        for (const auto& [v, u] : sel.pairs) take(i, v, u);
      }
    }
    if (added == 0)
      res.warnings.push_back(where + " matched no observed cells");
  }
  return res;
}

inline void write_truth(const std::vector<TruthCell>& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << "layer,time_index,u,v,value\n";
  for (const auto& t : truth)
    out << (t.cell.k + 1) << ',' << (t.cell.i + 1) << ',' << (t.cell.u + 1) << ','
        << (t.cell.v + 1) << ',' << static_cast<int>(t.value) << "\n";
  if (!out) throw data_error("write failed for '" + path + "'");
}

inline std::vector<TruthCell> load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "layer,time_index,u,v,value")
    throw data_error(path + ": expected header 'layer,time_index,u,v,value'");
  std::vector<TruthCell> truth;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = split(t, ',');
    if (f.size() != 5) throw data_error(where + ": expected 5 fields");
    TruthCell tc;
    tc.cell.k = static_cast<int>(parse_int(f[0], "layer")) - 1;
    tc.cell.i = static_cast<int>(parse_int(f[1], "time_index")) - 1;
    const long a = parse_int(f[2], "u");
    const long b = parse_int(f[3], "v");
    if (a == b) throw data_error(where + ": pair with identical actors");
    tc.cell.v = static_cast<int>(std::max(a, b)) - 1;
    tc.cell.u = static_cast<int>(std::min(a, b)) - 1;
    const long val = parse_int(f[4], "value");
    if (val != 0 && val != 1) throw data_error(where + ": truth value must be 0 or 1");
    tc.value = static_cast<int8_t>(val);
    truth.push_back(tc);
  }
  return truth;
}

// Full-coverage per-cell table (e.g. generating probabilities); one row per
// cell in flat order.
inline void write_cell_table(const std::string& path, const Dims& d,
                             const std::vector<double>& vals,
                             const std::string& value_col) {
  if (static_cast<long>(vals.size()) != d.cells())
    throw std::invalid_argument("write_cell_table: size mismatch");
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << "layer,time_index,u,v," << value_col << "\n";
  long idx = 0;
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i)
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx)
          out << (k + 1) << ',' << (i + 1) << ',' << (u + 1) << ',' << (v + 1)
              << ',' << fmt_double(vals[idx]) << "\n";
  if (!out) throw data_error("write failed for '" + path + "'");
}

inline std::vector<double> load_cell_table(const std::string& path, const Dims& d,
                                           const std::string& value_col) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || trim(line) != "layer,time_index,u,v," + value_col)
    throw data_error(path + ": expected header 'layer,time_index,u,v," + value_col + "'");
  std::vector<double> vals(d.cells(), std::numeric_limits<double>::quiet_NaN());
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = split(t, ',');
    if (f.size() != 5) throw data_error(where + ": expected 5 fields");
    const long k = parse_int(f[0], "layer"), ti = parse_int(f[1], "time_index");
    const long a = parse_int(f[2], "u"), b = parse_int(f[3], "v");
    if (k < 1 || k > d.K || ti < 1 || ti > d.n || a < 1 || a > d.V || b < 1 ||
        b > d.V || a == b)
      throw data_error(where + ": cell out of range");
    const long idx = d.flat(static_cast<int>(k - 1), static_cast<int>(ti - 1),
                            pair_index(static_cast<int>(std::max(a, b)) - 1,
                                       static_cast<int>(std::min(a, b)) - 1));
    vals[idx] = parse_double(f[4], value_col);
  }
  for (double v : vals)
    if (std::isnan(v)) throw data_error(path + ": table does not cover every cell");
  return vals;
}

}  // namespace dynmln
