#include "se3lab/targets.hpp"

#include <cmath>
#include <numbers>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"
#include "se3lab/igso3.hpp"
#include "se3lab/rng.hpp"

namespace se3lab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxRejections = 10000;

const std::map<std::string, std::map<std::string, double>>& Registry(Space space) {
  static const std::map<std::string, std::map<std::string, double>> r3 = {
      {"sine3d", {{"jitter", 0.02}}},
      {"lorenz", {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}, {"dt", 0.01}, {"burn_in", 1000}, {"stride", 5}}},
      {"gmm8", {{"sigma", 0.08}, {"corner", 0.7}}},
  };
  static const std::map<std::string, std::map<std::string, double>> so3 = {
      {"spiral", {{"amplitude", 0.45 * kPi}}},
      {"clusters", {{"k", 6}, {"eps2", 0.02}, {"range", 0.45 * kPi}}},
  };
  return space == Space::kR3 ? r3 : so3;
}

std::string JoinNames(Space space) {
  std::string s;
  for (const auto& name : TargetNames(space)) s += (s.empty() ? "" : ", ") + name;
  return s;
}

// Defaults overlaid with the spec's params; unknown keys are rejected.
std::map<std::string, double> Resolve(const TargetSpec& spec) {
  auto params = TargetParams(spec.space, spec.name);
  for (const auto& [key, value] : spec.params) {
    if (!params.count(key)) {
      throw Error(ErrorKind::kConfig, "target '" + spec.name + "' has no parameter '" + key + "'");
    }
    params[key] = value;
  }
  if (spec.n < 1) throw Error(ErrorKind::kConfig, "target sample count must be >= 1");
  return params;
}

void Center(std::vector<Vec3>& xs) {
  Vec3 mean = Vec3::Zero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  for (auto& x : xs) x -= mean;
}

Vec3 LorenzRate(const Vec3& p, double sigma, double rho, double beta) {
  return {sigma * (p.y() - p.x()), p.x() * (rho - p.z()) - p.y(), p.x() * p.y() - beta * p.z()};
}

std::vector<Vec3> Lorenz(const std::map<std::string, double>& p, std::size_t n, Rng& rng) {
  const double sigma = p.at("sigma"), rho = p.at("rho"), beta = p.at("beta"), dt = p.at("dt");
  const int burn_in = static_cast<int>(p.at("burn_in"));
  const int stride = std::max(1, static_cast<int>(p.at("stride")));
  Vec3 x = Vec3(1.0, 1.0, 1.0) + 0.1 * rng.Normal3();
  auto step = [&] {
    const Vec3 k1 = LorenzRate(x, sigma, rho, beta);
    const Vec3 k2 = LorenzRate(x + 0.5 * dt * k1, sigma, rho, beta);
    const Vec3 k3 = LorenzRate(x + 0.5 * dt * k2, sigma, rho, beta);
    const Vec3 k4 = LorenzRate(x + dt * k3, sigma, rho, beta);
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };
  for (int i = 0; i < burn_in; ++i) step();
  std::vector<Vec3> xs;
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < stride; ++k) step();
    xs.push_back(x);
  }
  Center(xs);
  double ms = 0.0;
  for (const auto& v : xs) ms += v.squaredNorm();
  const double rms = std::sqrt(ms / static_cast<double>(n));
  if (rms > 0.0)
    for (auto& v : xs) v /= rms;
  return xs;
}

bool InsideEulerBox(const Rotation& r) {
  const EulerAngles e = ToEuler(r);
  const double lim = 0.5 * kPi;
  return std::abs(e.alpha) <= lim && std::abs(e.beta) <= lim && std::abs(e.gamma) <= lim;
}

}  // namespace

std::vector<std::string> TargetNames(Space space) {
  std::vector<std::string> names;
  for (const auto& [name, _] : Registry(space)) names.push_back(name);
  return names;
}

std::map<std::string, double> TargetParams(Space space, const std::string& name) {
  const auto& reg = Registry(space);
  const auto it = reg.find(name);
  if (it == reg.end()) {
    throw Error(ErrorKind::kUnknownTarget, "unknown " + std::string(SpaceName(space)) + " target '" + name +
                                               "' (registered: " + JoinNames(space) + ")");
  }
  return it->second;
}

std::vector<Vec3> GenerateR3(const TargetSpec& spec) {
  if (spec.space != Space::kR3) throw Error(ErrorKind::kConfig, "GenerateR3 needs an r3 spec");
  const auto p = Resolve(spec);
  Rng rng(spec.seed);
  std::vector<Vec3> xs;
  xs.reserve(spec.n);
  if (spec.name == "lorenz") return Lorenz(p, spec.n, rng);
  if (spec.name == "sine3d") {
    const double jitter = p.at("jitter");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double s = rng.Uniform(-1.0, 1.0);
      const Vec3 curve(s, std::sin(2.0 * kPi * s), 0.5 * std::cos(2.0 * kPi * s));
      xs.push_back(curve + jitter * rng.Normal3());
    }
  } else {  // gmm8
    const double sigma = p.at("sigma"), corner = p.at("corner");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const auto mode = rng.Index(8);
      const Vec3 c(mode & 1 ? corner : -corner, mode & 2 ? corner : -corner, mode & 4 ? corner : -corner);
      xs.push_back(c + sigma * rng.Normal3());
    }
  }
  Center(xs);
  return xs;
}

std::vector<Rotation> GenerateSo3(const TargetSpec& spec) {
  if (spec.space != Space::kSO3) throw Error(ErrorKind::kConfig, "GenerateSo3 needs an so3 spec");
  const auto p = Resolve(spec);
  Rng rng(spec.seed);
  std::vector<Rotation> rs;
  rs.reserve(spec.n);
  if (spec.name == "spiral") {
    const double a = p.at("amplitude");
    for (std::size_t i = 0; i < spec.n; ++i) {
      const double s = rng.Uniform(-1.0, 1.0);
      rs.push_back(FromEuler({a * s * std::cos(3.0 * kPi * s), a * s * std::sin(3.0 * kPi * s), a * s}));
    }
    return rs;
  }

  const int k = static_cast<int>(p.at("k"));
  const double eps2 = p.at("eps2"), range = p.at("range");
  if (k < 1) throw Error(ErrorKind::kConfig, "clusters needs k >= 1");
  std::vector<Rotation> means;
  for (int c = 0; c < k; ++c) {
    means.push_back(FromEuler({rng.Uniform(-range, range), rng.Uniform(-range, range), rng.Uniform(-range, range)}));
  }
  const auto table = igso3::CachedTable(eps2);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const Rotation& mean = means[rng.Index(means.size())];
    for (int attempt = 0;; ++attempt) {
      const Rotation r = igso3::Sample(mean, *table, rng);
      if (InsideEulerBox(r)) {
        rs.push_back(r);
        break;
      }
      if (attempt >= kMaxRejections) {
        throw Error(ErrorKind::kConfig, "clusters: eps2 too large to stay inside the Euler box");
      }
    }
  }
  return rs;
}

void WriteR3Csv(const std::string& path, std::span<const Vec3> xs) {
  CsvWriter out(path, {"x", "y", "z"});
  for (const auto& x : xs) out.Row({x.x(), x.y(), x.z()});
  out.Close();
}

std::vector<Vec3> ReadR3Csv(const std::string& path) {
  const CsvTable t = ReadCsv(path);
  const auto cx = t.Column("x"), cy = t.Column("y"), cz = t.Column("z");
  std::vector<Vec3> xs;
  xs.reserve(t.rows.size());
  for (const auto& row : t.rows) xs.emplace_back(row[cx], row[cy], row[cz]);
  return xs;
}

void WriteSo3Csv(const std::string& path, std::span<const Rotation> rs) {
  CsvWriter out(path, {"r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "euler_a", "euler_b",
                       "euler_g"});
  std::vector<double> row(12);
  for (const auto& r : rs) {
    r.ToRowMajor({row.data(), 9});
    const EulerAngles e = ToEuler(r);
    row[9] = e.alpha;
    row[10] = e.beta;
    row[11] = e.gamma;
    out.Row(std::span<const double>(row));
  }
  out.Close();
}

std::vector<Rotation> ReadSo3Csv(const std::string& path) {
  const CsvTable t = ReadCsv(path);
  static const char* kNames[9] = {"r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33"};
  std::size_t cols[9];
  for (int k = 0; k < 9; ++k) cols[k] = t.Column(kNames[k]);
  std::vector<Rotation> rs;
  rs.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Mat3 m;
    for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = t.rows[i][cols[k]];
    if (Rotation::IsValid(m)) {
      rs.push_back(Rotation::FromMatrix(m));
    } else if (Rotation::IsValid(m, 1e-6)) {
      rs.push_back(Rotation::Nearest(m));
    } else {
      throw Error(ErrorKind::kParse, path + ": row " + std::to_string(i + 2) + " is not a rotation matrix");
    }
  }
  return rs;
}

}  // namespace se3lab
