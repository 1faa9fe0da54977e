#include "runner/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"

namespace se3lab::runner {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double Since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

void MakeDirectory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::kIO, "cannot create directory " + dir);
}

template <class Point>
void WriteSamples(const std::string& path, std::span<const Point> xs) {
  if constexpr (std::is_same_v<Point, Vec3>) {
    WriteR3Csv(path, xs);
  } else {
    WriteSo3Csv(path, xs);
  }
}

template <class Point>
RunResult TrainOn(const RunConfig& c, std::vector<Point> all, const TrainCallback& callback) {
  const fs::path dir(c.output_dir);
  std::vector<Point> train(all.begin(), all.begin() + c.n_target);
  std::vector<Point> heldout(all.begin() + c.n_target, all.end());

  std::unique_ptr<Engine<Point>> engine;
  if constexpr (std::is_same_v<Point, Vec3>) {
    engine = MakeR3Engine(c.paradigm, c.engine);
  } else {
    engine = MakeSo3Engine(c.paradigm, c.engine);
  }
  std::vector<Point> samples;
  const TrainLog log = Train<Point>(*engine, train, heldout, c.train, &samples, callback);

  RunResult r;
  r.directory = c.output_dir;
  r.initial_w1 = log.initial_w1;
  r.final_w1 = log.final_w1();
  WriteSamples<Point>((dir / "target.csv").string(), train);
  WriteSamples<Point>((dir / "heldout.csv").string(), heldout);
  log.WriteCsv((dir / "log.csv").string());
  WriteSamples<Point>((dir / "samples.csv").string(), samples);
  r.files = {"target.csv", "heldout.csv", "log.csv", "samples.csv"};
  if (c.write_checkpoint) {
    SaveCheckpoint(engine->sampling_net(), (dir / "checkpoint.txt").string());
    r.files.push_back("checkpoint.txt");
  }
  return r;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

std::string Version() {
#ifdef SE3LAB_VERSION
  return SE3LAB_VERSION;
#else
  return "unknown";
#endif
}

void Manifest::Write(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIO, "cannot write " + path);
  out << "se3lab-manifest 1\n";
  out << "version " << Version() << "\n";
  out << "command " << command << "\n";
  out << "seconds " << FormatDouble(seconds) << "\n";
  for (const auto& [k, v] : config) out << "config " << k << " " << v << "\n";
  for (const auto& f : files) out << "file " << f << "\n";
  if (!out.flush()) throw Error(ErrorKind::kIO, "write failed for " + path);
}

Manifest Manifest::Read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIO, "cannot read " + path);
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto sp = line.find(' ');
    const std::string tag = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (lineno == 1) {
      if (line != "se3lab-manifest 1") throw Error(ErrorKind::kParse, path + ": not a manifest");
    } else if (tag == "command") {
      m.command = rest;
    } else if (tag == "seconds") {
      m.seconds = std::stod(rest);
    } else if (tag == "config") {
      const auto k = rest.find(' ');
      m.config.emplace_back(rest.substr(0, k), k == std::string::npos ? "" : rest.substr(k + 1));
    } else if (tag == "file") {
      m.files.push_back(rest);
    } else if (tag != "version") {
      throw Error(ErrorKind::kParse, path + ":" + std::to_string(lineno) + ": unknown manifest entry");
    }
  }
  return m;
}

RunResult RunTrain(const RunConfig& config, const TrainCallback& callback) {
  const auto start = Clock::now();
  MakeDirectory(config.output_dir);
  TargetSpec spec = config.Spec();
  spec.n = config.n_target + config.train.eval_n;
  RunResult r = config.space == Space::kR3 ? TrainOn<Vec3>(config, GenerateR3(spec), callback)
                                           : TrainOn<Rotation>(config, GenerateSo3(spec), callback);
  Manifest m{"train", config.Echo(), r.files, Since(start)};
  m.Write((fs::path(config.output_dir) / "manifest.txt").string());
  r.files.push_back("manifest.txt");
  return r;
}

void RunTarget(const TargetSpec& spec, const std::string& path) {
  const auto start = Clock::now();
  const fs::path p(path);
  if (p.has_parent_path()) MakeDirectory(p.parent_path().string());
  if (spec.space == Space::kR3) {
    WriteR3Csv(path, GenerateR3(spec));
  } else {
    WriteSo3Csv(path, GenerateSo3(spec));
  }
  Manifest m;
  m.command = "target";
  m.config = {{"space", std::string(SpaceName(spec.space))},
              {"name", spec.name},
              {"n", std::to_string(spec.n)},
              {"seed", std::to_string(spec.seed)}};
  for (const auto& [k, v] : spec.params) m.config.emplace_back("param." + k, FormatDouble(v));
  m.files = {p.filename().string()};
  m.seconds = Since(start);
  m.Write(path + ".manifest.txt");
}

GroundCost ParseCost(const std::string& name) {
  if (name == "euclidean") return GroundCost::kEuclidean;
  if (name == "geodesic") return GroundCost::kGeodesic;
  throw Error(ErrorKind::kConfig, "unknown cost '" + name + "' (expected euclidean or geodesic)");
}

EvalResult RunEval(const std::string& samples, const std::string& target, Space space, GroundCost cost,
                   const std::string& record_path) {
  const GroundCost expected = space == Space::kR3 ? GroundCost::kEuclidean : GroundCost::kGeodesic;
  if (cost != expected) {
    throw Error(ErrorKind::kConfig, std::string("space ") + std::string(SpaceName(space)) + " uses the " +
                                        (space == Space::kR3 ? "euclidean" : "geodesic") + " cost");
  }
  EvalResult r;
  if (space == Space::kR3) {
    const auto a = ReadR3Csv(samples);
    const auto b = ReadR3Csv(target);
    r.w1 = W1Exact(std::span<const Vec3>(a), std::span<const Vec3>(b));
    r.n = a.size();
  } else {
    const auto a = ReadSo3Csv(samples);
    const auto b = ReadSo3Csv(target);
    r.w1 = W1Exact(std::span<const Rotation>(a), std::span<const Rotation>(b));
    r.n = a.size();
  }
  nlohmann::json j = {
      {"samples", samples},
      {"target", target},
      {"space", std::string(SpaceName(space))},
      {"cost", cost == GroundCost::kEuclidean ? "euclidean" : "geodesic"},
      {"n", r.n},
      {"w1", r.w1},
      {"version", Version()},
  };
  std::ofstream out(record_path);
  if (!out) throw Error(ErrorKind::kIO, "cannot write " + record_path);
  out << j.dump(2) << "\n";
  if (!out.flush()) throw Error(ErrorKind::kIO, "write failed for " + record_path);
  return r;
}

std::string CellDirectory(Space space, Paradigm paradigm, std::uint64_t seed) {
  return std::string(SpaceName(space)) + "_" + std::string(ParadigmName(paradigm)) + "_seed" + std::to_string(seed);
}

std::vector<CellResult> RunSweep(const SweepConfig& config, int threads) {
  const auto start = Clock::now();
  MakeDirectory(config.output_dir);
  std::vector<CellResult> cells;
  for (std::uint64_t seed : config.seeds)
    for (Space sp : config.spaces)
      for (Paradigm p : config.paradigms) {
        CellResult c;
        c.space = sp;
        c.paradigm = p;
        c.seed = seed;
        c.directory = CellDirectory(sp, p, seed);
        cells.push_back(c);
      }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      CellResult& c = cells[i];
      try {
        RunConfig rc = config.Cell(c.space, c.paradigm, c.seed);
        rc.output_dir = (fs::path(config.output_dir) / c.directory).string();
        const RunResult r = RunTrain(rc);
        c.initial_w1 = r.initial_w1;
        c.final_w1 = r.final_w1;
        c.ok = true;
        c.status = "ok";
      } catch (const std::exception& e) {
        c.status = e.what();
      }
    }
  };
  const int n_threads =
      std::clamp(threads > 0 ? threads : config.threads, 1, static_cast<int>(std::max<std::size_t>(1, cells.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const fs::path dir(config.output_dir);
  {
    CsvWriter summary((dir / "summary.csv").string(),
                      {"space", "paradigm", "seed", "initial_w1", "final_w1", "ratio", "status"});
    for (const auto& c : cells) {
      std::string status = c.status;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
      const bool ok = c.ok;
      summary.Row(std::vector<std::string>{
          std::string(SpaceName(c.space)), std::string(ParadigmName(c.paradigm)), std::to_string(c.seed),
          ok ? FormatDouble(c.initial_w1) : "nan", ok ? FormatDouble(c.final_w1) : "nan",
          ok ? FormatDouble(c.final_w1 / c.initial_w1) : "nan", status});
    }
    summary.Close();
  }
  {
    // Report only: does flow matching end at or below DDPM?
    CsvWriter cmp((dir / "comparison.csv").string(),
                  {"space", "seed", "flow_final_w1", "ddpm_final_w1", "flow_le_ddpm"});
    std::map<std::tuple<std::uint64_t, int, int>, const CellResult*> index;
    for (const auto& c : cells) index[{c.seed, static_cast<int>(c.space), static_cast<int>(c.paradigm)}] = &c;
    for (std::uint64_t seed : config.seeds)
      for (Space sp : config.spaces) {
        const auto f = index.find({seed, static_cast<int>(sp), static_cast<int>(Paradigm::kFlow)});
        const auto d = index.find({seed, static_cast<int>(sp), static_cast<int>(Paradigm::kDdpm)});
        if (f == index.end() || d == index.end() || !f->second->ok || !d->second->ok) continue;
        const double fw = f->second->final_w1, dw = d->second->final_w1;
        cmp.Row(std::vector<std::string>{std::string(SpaceName(sp)), std::to_string(seed), FormatDouble(fw),
                                         FormatDouble(dw), fw <= dw ? "1" : "0"});
      }
    cmp.Close();
  }
  Manifest m;
  m.command = "sweep";
  for (const auto& [k, v] : config.base) {
    std::ostringstream os;
    os << v;
    std::string text = os.str();
    std::replace(text.begin(), text.end(), '\n', ' ');
    m.config.emplace_back(k, Trim(text));
  }
  m.files = {"summary.csv", "comparison.csv"};
  for (const auto& c : cells) {
    if (c.ok) m.files.push_back((fs::path(c.directory) / "manifest.txt").string());
  }
  m.seconds = Since(start);
  m.Write((dir / "manifest.txt").string());
  return cells;
}

int ExitCode(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::kConfig:
      case ErrorKind::kParse:
      case ErrorKind::kUnknownTarget:
        return 1;
      default:
        return 2;
    }
  }
  return 2;
}

}  // namespace se3lab::runner
