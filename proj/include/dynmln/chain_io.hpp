#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dynmln/gibbs.hpp"
#include "dynmln/net_data.hpp"
#include "dynmln/text.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

static_assert(std::endian::native == std::endian::little,
              "sample persistence assumes a little-endian host");

// FNV-1a 64-bit content hash; cheap tamper detection for run artifacts.
inline std::uint64_t fnv1a(const void* data, size_t len,
                           std::uint64_t h = 14695981039346656037ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path + "' for hashing");
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a(buf, static_cast<size_t>(in.gcount()), h);
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace chain_detail {

inline nlohmann::json config_json(const PosteriorChain& chain) {
  nlohmann::json j;
  j["V"] = chain.dims.V;
  j["K"] = chain.dims.K;
  j["n"] = chain.dims.n;
  std::vector<double> grid(chain.grid.data(), chain.grid.data() + chain.grid.size());
  j["grid"] = grid;
  j["variant"] = variant_name(chain.cfg.variant);
  j["R"] = chain.cfg.R;
  j["H"] = chain.cfg.H;
  j["iterations"] = chain.cfg.iterations;
  j["burn_in"] = chain.cfg.burn_in;
  j["thin"] = chain.cfg.thin;
  j["seed"] = chain.cfg.seed;
  j["kappa_mu"] = chain.cfg.kappa_mu;
  j["kappa_xbar"] = chain.cfg.kappa_xbar;
  j["kappa_x"] = chain.cfg.kappa_x;
  j["a1"] = chain.cfg.a1;
  j["a2"] = chain.cfg.a2;
  j["parallel_layers"] = chain.cfg.parallel_layers;
  j["rng"] = chain.rng_provenance;
  j["retained"] = chain.retained();
  j["cell_order"] = "(layer, time_index, v, u) lexicographic, v > u, 1-based in files";
  j["sample_format"] = "float64 little-endian, one edge-probability tensor per retained sweep";
  return j;
}

}  // namespace chain_detail

// Persist a chain as a run directory:
//   config.json   sampler configuration and tensor layout
//   samples.bin   retained edge-probability draws (raw doubles)
//   index.txt     retained sweep numbers
//   missing.csv   cells that were imputed during the fit
//   manifest.json command line, config, file list with content hashes
inline void save_chain(const PosteriorChain& chain, const std::string& dir,
                       const std::string& command, double wall_time_s,
                       const std::vector<std::pair<std::string, std::string>>&
                           input_paths = {},
                       const std::vector<std::string>& extra_artifacts = {}) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (!fs::is_directory(root))
    throw data_error("cannot create run directory '" + dir + "'");

  {
    std::ofstream out(root / "config.json");
    if (!out) throw data_error("cannot write config.json in '" + dir + "'");
    out << chain_detail::config_json(chain).dump(2) << "\n";
  }
  {
    std::ofstream out(root / "samples.bin", std::ios::binary);
    if (!out) throw data_error("cannot write samples.bin in '" + dir + "'");
    out.write(reinterpret_cast<const char*>(chain.pi.data()),
              static_cast<std::streamsize>(chain.pi.size() * sizeof(double)));
    if (!out) throw data_error("write failed for samples.bin in '" + dir + "'");
  }
  {
    std::ofstream out(root / "index.txt");
    if (!out) throw data_error("cannot write index.txt in '" + dir + "'");
    for (int s : chain.sweeps) out << s << "\n";
  }
  {
    std::ofstream out(root / "missing.csv");
    if (!out) throw data_error("cannot write missing.csv in '" + dir + "'");
    out << "layer,time_index,u,v\n";
    for (const auto& c : chain.missing)
      out << (c.k + 1) << ',' << (c.i + 1) << ',' << (c.u + 1) << ',' << (c.v + 1) << "\n";
  }

  nlohmann::json mani;
  mani["command"] = command;
  mani["seed"] = chain.cfg.seed;
  mani["wall_time_s"] = wall_time_s;
  mani["config"] = chain_detail::config_json(chain);
  for (const auto& [name, p] : input_paths) mani["inputs"][name] = p;
  nlohmann::json hashes;
  std::vector<std::string> files = {"config.json", "samples.bin", "index.txt", "missing.csv"};
  files.insert(files.end(), extra_artifacts.begin(), extra_artifacts.end());
  for (const auto& f : files) {
    mani["paths"][f] = (root / f).string();
    hashes[f] = hash_hex(fnv1a_file((root / f).string()));
  }
  mani["hashes"] = hashes;
  std::ofstream out(root / "manifest.json");
  if (!out) throw data_error("cannot write manifest.json in '" + dir + "'");
  out << mani.dump(2) << "\n";
  if (!out) throw data_error("write failed for manifest.json in '" + dir + "'");
}

// Load a persisted chain, verifying artifact hashes against the manifest
// unless disabled.
inline PosteriorChain load_chain(const std::string& dir, bool verify_hashes = true) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw data_error("'" + dir + "' is not a run directory");

  nlohmann::json mani;
  {
    std::ifstream in(root / "manifest.json");
    if (!in) throw data_error("cannot open manifest.json in '" + dir + "'");
    try {
      in >> mani;
    } catch (const nlohmann::json::exception& e) {
      throw data_error("malformed manifest.json in '" + dir + "': " + e.what());
    }
  }
  if (verify_hashes) {
    if (!mani.contains("hashes")) throw data_error("manifest.json lacks artifact hashes");
    for (auto& [f, h] : mani["hashes"].items()) {
      const std::string actual = hash_hex(fnv1a_file((root / f).string()));
      if (actual != h.get<std::string>())
        throw data_error("hash mismatch for " + f + " in '" + dir +
                         "': run artifacts were modified");
    }
  }

  nlohmann::json cfgj;
  {
    std::ifstream in(root / "config.json");
    if (!in) throw data_error("cannot open config.json in '" + dir + "'");
    try {
      in >> cfgj;
    } catch (const nlohmann::json::exception& e) {
      throw data_error("malformed config.json in '" + dir + "': " + e.what());
    }
  }

  PosteriorChain chain;
  try {
    chain.dims = {cfgj.at("V").get<int>(), cfgj.at("K").get<int>(), cfgj.at("n").get<int>()};
    const auto grid = cfgj.at("grid").get<std::vector<double>>();
    chain.grid = Eigen::Map<const Vector>(grid.data(), static_cast<Eigen::Index>(grid.size()));
    chain.cfg.variant = parse_variant(cfgj.at("variant").get<std::string>());
    chain.cfg.R = cfgj.at("R").get<int>();
    chain.cfg.H = cfgj.at("H").get<int>();
    chain.cfg.iterations = cfgj.at("iterations").get<int>();
    chain.cfg.burn_in = cfgj.at("burn_in").get<int>();
    chain.cfg.thin = cfgj.at("thin").get<int>();
    chain.cfg.seed = cfgj.at("seed").get<std::uint64_t>();
    chain.cfg.kappa_mu = cfgj.at("kappa_mu").get<double>();
    chain.cfg.kappa_xbar = cfgj.at("kappa_xbar").get<double>();
    chain.cfg.kappa_x = cfgj.at("kappa_x").get<double>();
    chain.cfg.a1 = cfgj.at("a1").get<double>();
    chain.cfg.a2 = cfgj.at("a2").get<double>();
    chain.cfg.parallel_layers = cfgj.at("parallel_layers").get<bool>();
    chain.rng_provenance = cfgj.value("rng", "");
  } catch (const nlohmann::json::exception& e) {
    throw data_error("config.json in '" + dir + "' is incomplete: " + e.what());
  }

  {
    std::ifstream in(root / "index.txt");
    if (!in) throw data_error("cannot open index.txt in '" + dir + "'");
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = trim(line);
      if (!t.empty()) chain.sweeps.push_back(static_cast<int>(parse_int(t, "sweep number")));
    }
  }

  const long cells = chain.dims.cells();
  {
    std::ifstream in(root / "samples.bin", std::ios::binary);
    if (!in) throw data_error("cannot open samples.bin in '" + dir + "'");
    in.seekg(0, std::ios::end);
    const auto bytes = static_cast<long>(in.tellg());
    in.seekg(0);
    const long expect = static_cast<long>(chain.sweeps.size()) * cells *
                        static_cast<long>(sizeof(double));
    if (bytes != expect)
      throw data_error("samples.bin in '" + dir + "' has " + std::to_string(bytes) +
                       " bytes, expected " + std::to_string(expect));
    chain.pi.resize(static_cast<size_t>(chain.sweeps.size()) * cells);
    in.read(reinterpret_cast<char*>(chain.pi.data()), bytes);
    if (!in) throw data_error("read failed for samples.bin in '" + dir + "'");
  }

  {
    std::ifstream in(root / "missing.csv");
    if (!in) throw data_error("cannot open missing.csv in '" + dir + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "layer,time_index,u,v")
      throw data_error("missing.csv in '" + dir + "' has an unexpected header");
    long lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty()) continue;
      const auto f = split(t, ',');
      if (f.size() != 4)
        throw data_error("missing.csv:" + std::to_string(lineno) + ": expected 4 fields");
      CellRef c;
      c.k = static_cast<int>(parse_int(f[0], "layer")) - 1;
      c.i = static_cast<int>(parse_int(f[1], "time_index")) - 1;
      const long a = parse_int(f[2], "u"), b = parse_int(f[3], "v");
      c.v = static_cast<int>(std::max(a, b)) - 1;
      c.u = static_cast<int>(std::min(a, b)) - 1;
      chain.missing.push_back(c);
    }
  }
  return chain;
}

// Streaming per-cell mean over samples.bin, independent of load_chain's
// in-memory path; reads the file in fixed-size blocks.
inline std::vector<double> streaming_cell_mean(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  nlohmann::json cfgj;
  {
    std::ifstream in(root / "config.json");
    if (!in) throw data_error("cannot open config.json in '" + dir + "'");
    in >> cfgj;
  }
  const Dims d{cfgj.at("V").get<int>(), cfgj.at("K").get<int>(), cfgj.at("n").get<int>()};
  const long cells = d.cells();
  std::vector<double> sum(cells, 0.0);
  std::ifstream in(root / "samples.bin", std::ios::binary);
  if (!in) throw data_error("cannot open samples.bin in '" + dir + "'");
  std::vector<double> row(cells);
  long rows = 0;
  while (in.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(cells * sizeof(double)))) {
    for (long c = 0; c < cells; ++c) sum[c] += row[c];
    ++rows;
  }
  if (in.gcount() != 0)
    throw data_error("samples.bin in '" + dir + "' is not a whole number of draws");
  if (rows == 0) throw data_error("samples.bin in '" + dir + "' holds no draws");
  for (long c = 0; c < cells; ++c) sum[c] /= static_cast<double>(rows);
  return sum;
}

}  // namespace dynmln
