#include "tailslab/trajectory_io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace tailslab {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary snapshot format assumes a little-endian host");

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

namespace {
constexpr char kMagic[] = "TAILSLAB1";
constexpr std::size_t kMagicLen = 9;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}
}  // namespace

void write_slab(const fs::path& path, const SlabFile& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  std::string header;
  for (const auto& [k, v] : f.header) header += k + "=" + v + "\n";
  header += "record_width=" + std::to_string(f.record_width) + "\n";
  os.write(kMagic, kMagicLen);
  const std::uint32_t len = static_cast<std::uint32_t>(header.size());
  os.write(reinterpret_cast<const char*>(&len), 4);
  os.write(header.data(), header.size());
  for (std::size_t i = 0; i < f.times.size(); ++i) {
    if (static_cast<int>(f.records[i].size()) != f.record_width)
      throw IoError("write_slab: record width mismatch");
    os.write(reinterpret_cast<const char*>(&f.times[i]), 8);
    os.write(reinterpret_cast<const char*>(f.records[i].data()), 8 * f.record_width);
  }
  if (!os) throw IoError("write failed: " + path.string());
}

SlabFile read_slab(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("missing artifact " + path.string());
  char magic[kMagicLen];
  is.read(magic, kMagicLen);
  if (!is || std::memcmp(magic, kMagic, kMagicLen) != 0)
    throw IoError(path.string() + ": bad magic (expected TAILSLAB1)");
  std::uint32_t len = 0;
  is.read(reinterpret_cast<char*>(&len), 4);
  std::string header(len, '\0');
  is.read(header.data(), len);
  SlabFile f;
  for (const auto& line : split(header, '\n')) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    f.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  f.record_width = std::stoi(f.header.at("record_width"));
  f.header.erase("record_width");
  std::vector<double> buf(f.record_width);
  double t;
  while (is.read(reinterpret_cast<char*>(&t), 8)) {
    is.read(reinterpret_cast<char*>(buf.data()), 8 * f.record_width);
    if (!is) throw IoError(path.string() + ": truncated record");
    f.times.push_back(t);
    f.records.push_back(buf);
  }
  return f;
}

namespace {

std::string modes_string(const Trajectory& t) {
  std::string s;
  for (auto [l, m] : t.modes) s += fmt::format("{}{}:{}", s.empty() ? "" : ",", l, m);
  return s;
}

std::vector<std::pair<int, int>> parse_modes(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  for (const auto& item : split(s, ',')) {
    const auto c = item.find(':');
    out.emplace_back(std::stoi(item.substr(0, c)), std::stoi(item.substr(c + 1)));
  }
  return out;
}

std::map<std::string, std::string> read_kv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("missing artifact " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("missing artifact " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line))
    if (!line.empty()) rows.push_back(split(line, ','));
  return rows;
}

}  // namespace

std::vector<std::string> write_trajectory(const Trajectory& traj, const fs::path& dir) {
  fs::create_directories(dir);
  const int nm = static_cast<int>(traj.modes.size());
  const int nodes = traj.nodes();
  std::vector<std::string> files;
  {
    std::ofstream os(dir / "trajectory_meta.txt");
    os << "spec_hash = " << traj.spec_hash << "\n";
    os << "status = " << traj.status << "\n";
    os << "blowup_time = " << fmt_double(traj.blowup_time) << "\n";
    os << "t_final = " << fmt_double(traj.t_final) << "\n";
    os << "n = " << traj.grid.n << "\n";
    os << "cfl = " << fmt_double(traj.grid.cfl) << "\n";
    os << "ko = " << fmt_double(traj.grid.ko) << "\n";
    os << "spherical = " << (traj.spherical ? 1 : 0) << "\n";
    os << "sphere_lmax = " << traj.sphere->lmax() << "\n";
    os << "modes = " << modes_string(traj) << "\n";
    std::string pr;
    for (double r : traj.probe_r) pr += (pr.empty() ? "" : ",") + fmt_double(r);
    os << "probe_r = " << pr << "\n";
    files.push_back("trajectory_meta.txt");
  }
  {
    std::ofstream os(dir / "trajectory.csv");
    os << "t_star,probe_id,r,phi,dphi_dt\n";
    for (std::size_t i = 0; i < traj.probe_t.size(); ++i)
      for (std::size_t p = 0; p < traj.probe_r.size(); ++p)
        for (int k = 0; k < nodes; ++k)
          os << fmt_double(traj.probe_t[i]) << ',' << p * nodes + k << ','
             << fmt_double(traj.probe_r[p]) << ',' << fmt_double(traj.probe_phi[i][p][k]) << ','
             << fmt_double(traj.probe_dphi[i][p][k]) << '\n';
    files.push_back("trajectory.csv");
  }
  {
    std::ofstream os(dir / "scri_trace.csv");
    os << "t_star,theta_index,phi_index,rad1_raw\n";
    std::vector<double> vals(nm);
    for (std::size_t i = 0; i < traj.near_t.size(); ++i) {
      for (int m = 0; m < nm; ++m) vals[m] = traj.near_phi[i][m][0];
      for (int k = 0; k < nodes; ++k)
        os << fmt_double(traj.near_t[i]) << ',' << k / traj.sphere->nphi() << ','
           << k % traj.sphere->nphi() << ',' << fmt_double(traj.nodal(vals, k)) << '\n';
    }
    files.push_back("scri_trace.csv");
  }
  {
    std::ofstream os(dir / "monitors.csv");
    os << "t_star,energy,apriori\n";
    for (std::size_t i = 0; i < traj.mon_t.size(); ++i)
      os << fmt_double(traj.mon_t[i]) << ',' << fmt_double(traj.energy[i]) << ','
         << fmt_double(traj.apriori[i]) << '\n';
    files.push_back("monitors.csv");
  }
  auto base_header = [&](const std::string& kind) {
    std::map<std::string, std::string> h;
    h["kind"] = kind;
    h["n"] = std::to_string(traj.grid.n);
    h["cfl"] = fmt_double(traj.grid.cfl);
    h["ko"] = fmt_double(traj.grid.ko);
    h["spec_hash"] = traj.spec_hash;
    h["modes"] = modes_string(traj);
    return h;
  };
  {
    SlabFile f;
    f.header = base_header("near_scri");
    const int K = traj.near_phi.empty() ? 0 : static_cast<int>(traj.near_phi[0][0].size());
    f.header["near_points"] = std::to_string(K);
    f.record_width = nm * (K + 1);
    for (std::size_t i = 0; i < traj.near_t.size(); ++i) {
      std::vector<double> rec;
      rec.reserve(f.record_width);
      for (int m = 0; m < nm; ++m) {
        rec.insert(rec.end(), traj.near_phi[i][m].begin(), traj.near_phi[i][m].end());
        rec.push_back(traj.near_pi[i][m]);
      }
      f.times.push_back(traj.near_t[i]);
      f.records.push_back(std::move(rec));
    }
    write_slab(dir / "scri_near.bin", f);
    files.push_back("scri_near.bin");
  }
  {
    SlabFile f;
    f.header = base_header("snapshot");
    const int n1 = traj.grid.n + 1;
    f.record_width = nm * 2 * n1;
    for (std::size_t i = 0; i < traj.snap_t.size(); ++i) {
      std::vector<double> rec;
      rec.reserve(f.record_width);
      for (int m = 0; m < nm; ++m) {
        rec.insert(rec.end(), traj.snap_phi[i][m].begin(), traj.snap_phi[i][m].end());
        rec.insert(rec.end(), traj.snap_pi[i][m].begin(), traj.snap_pi[i][m].end());
      }
      f.times.push_back(traj.snap_t[i]);
      f.records.push_back(std::move(rec));
    }
    write_slab(dir / "snapshots.bin", f);
    files.push_back("snapshots.bin");
  }
  return files;
}

Trajectory read_trajectory(const fs::path& dir, const ProblemSpec& spec) {
  const auto meta = read_kv(dir / "trajectory_meta.txt");
  Trajectory t;
  t.spec = spec;
  t.grid.n = std::stoi(meta.at("n"));
  t.grid.cfl = std::stod(meta.at("cfl"));
  t.grid.ko = std::stod(meta.at("ko"));
  t.t_final = std::stod(meta.at("t_final"));
  t.spec_hash = meta.at("spec_hash");
  if (t.spec_hash != spec_hash(spec, t.grid, t.t_final))
    throw IoError("trajectory in " + dir.string() + " was produced from a different problem");
  t.status = meta.at("status");
  t.blowup_time = std::stod(meta.at("blowup_time"));
  t.spherical = meta.at("spherical") == "1";
  t.sphere = SphereGrid::make(std::stoi(meta.at("sphere_lmax")));
  t.modes = parse_modes(meta.at("modes"));
  for (const auto& s : split(meta.at("probe_r"), ',')) t.probe_r.push_back(std::stod(s));
  const int nm = static_cast<int>(t.modes.size());
  const int nodes = t.nodes();
  const int np = static_cast<int>(t.probe_r.size());

  {
    const auto rows = read_csv(dir / "trajectory.csv");
    const std::size_t per_time = static_cast<std::size_t>(np) * nodes;
    if (per_time == 0 || rows.size() % per_time != 0)
      throw IoError("trajectory.csv: unexpected row count");
    for (std::size_t i = 0; i < rows.size(); i += per_time) {
      t.probe_t.push_back(std::stod(rows[i][0]));
      std::vector<std::vector<double>> ph(np, std::vector<double>(nodes)), dph = ph;
      for (std::size_t q = 0; q < per_time; ++q) {
        const auto& row = rows[i + q];
        const int id = std::stoi(row[1]);
        ph[id / nodes][id % nodes] = std::stod(row[3]);
        dph[id / nodes][id % nodes] = std::stod(row[4]);
      }
      t.probe_phi.push_back(std::move(ph));
      t.probe_dphi.push_back(std::move(dph));
    }
  }
  {
    const auto rows = read_csv(dir / "monitors.csv");
    for (const auto& row : rows) {
      t.mon_t.push_back(std::stod(row[0]));
      t.energy.push_back(std::stod(row[1]));
      t.apriori.push_back(std::stod(row[2]));
    }
  }
  {
    const auto f = read_slab(dir / "scri_near.bin");
    if (f.header.at("spec_hash") != t.spec_hash) throw IoError("scri_near.bin: hash mismatch");
    const int K = std::stoi(f.header.at("near_points"));
    for (std::size_t i = 0; i < f.times.size(); ++i) {
      t.near_t.push_back(f.times[i]);
      std::vector<std::vector<double>> rec(nm);
      std::vector<double> pis(nm);
      for (int m = 0; m < nm; ++m) {
        const double* b = f.records[i].data() + m * (K + 1);
        rec[m].assign(b, b + K);
        pis[m] = b[K];
      }
      t.near_phi.push_back(std::move(rec));
      t.near_pi.push_back(std::move(pis));
    }
  }
  {
    const auto f = read_slab(dir / "snapshots.bin");
    if (f.header.at("spec_hash") != t.spec_hash) throw IoError("snapshots.bin: hash mismatch");
    const int n1 = t.grid.n + 1;
    for (std::size_t i = 0; i < f.times.size(); ++i) {
      t.snap_t.push_back(f.times[i]);
      std::vector<std::vector<double>> a(nm), b(nm);
      for (int m = 0; m < nm; ++m) {
        const double* p = f.records[i].data() + m * 2 * n1;
        a[m].assign(p, p + n1);
        b[m].assign(p + n1, p + 2 * n1);
      }
      t.snap_phi.push_back(std::move(a));
      t.snap_pi.push_back(std::move(b));
    }
  }
  return t;
}

}  // namespace tailslab
