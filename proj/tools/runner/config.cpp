#include "runner/config.hpp"

#include <functional>

#include "se3lab/csv.hpp"
#include "se3lab/error.hpp"

namespace se3lab::runner {

namespace {

std::string Where(const std::string& source, const YAML::Node& node, const std::string& key) {
  const auto mark = node.Mark();
  std::string s = source;
  if (mark.line >= 0) s += ":" + std::to_string(mark.line + 1);
  return s + ": key '" + key + "'";
}

template <class T>
T As(const YAML::Node& node, const std::string& key, const std::string& source, const char* expected) {
  try {
    if (!node.IsScalar()) throw YAML::BadConversion(node.Mark());
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorKind::kConfig, Where(source, node, key) + ": expected " + expected);
  }
}

template <class T>
std::vector<T> AsList(const YAML::Node& node, const std::string& key, const std::string& source,
                      const char* expected) {
  if (node.IsScalar()) return {As<T>(node, key, source, expected)};
  if (!node.IsSequence() || node.size() == 0) {
    throw Error(ErrorKind::kConfig, Where(source, node, key) + ": expected a nonempty list of " + expected);
  }
  std::vector<T> out;
  for (const auto& item : node) out.push_back(As<T>(item, key, source, expected));
  return out;
}

void Require(bool ok, const std::string& source, const YAML::Node& node, const std::string& key,
             const std::string& what) {
  if (!ok) throw Error(ErrorKind::kConfig, Where(source, node, key) + ": " + what);
}

constexpr std::uint64_t kEngineStream = 7;

std::string BoolText(bool b) { return b ? "true" : "false"; }

}  // namespace

TargetSpec RunConfig::Spec() const {
  TargetSpec spec;
  spec.space = space;
  spec.name = target;
  spec.n = n_target;
  spec.seed = target_seed.value_or(train.seed);
  spec.params = target_params;
  return spec;
}

std::vector<std::pair<std::string, std::string>> RunConfig::Echo() const {
  std::vector<std::pair<std::string, std::string>> e = {
      {"space", std::string(SpaceName(space))},
      {"paradigm", std::string(ParadigmName(paradigm))},
      {"target", target},
  };
  for (const auto& [k, v] : target_params) e.emplace_back("target." + k, FormatDouble(v));
  std::string hidden;
  for (int h : engine.net.hidden) hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
  const auto num = [](double v) { return FormatDouble(v); };
  e.insert(e.end(), {
                        {"n_target", std::to_string(n_target)},
                        {"epochs", std::to_string(train.epochs)},
                        {"batch_size", std::to_string(train.batch_size)},
                        {"eval_every", std::to_string(train.eval_every)},
                        {"eval_n", std::to_string(train.eval_n)},
                        {"seed", std::to_string(train.seed)},
                        {"target_seed", std::to_string(Spec().seed)},
                        {"hidden", hidden},
                        {"time_dim", std::to_string(engine.net.time_dim)},
                        {"activation", engine.net.activation == Activation::kGelu ? "gelu" : "tanh"},
                        {"learning_rate", num(engine.adam.learning_rate)},
                        {"lr_decay", train.lr_decay == LrDecay::kCosine ? "cosine" : "none"},
                        {"final_lr_fraction", num(train.final_lr_fraction)},
                        {"ema_decay", num(engine.ema_decay)},
                        {"ddpm_steps", std::to_string(engine.ddpm_steps)},
                        {"beta_min", num(engine.beta_min)},
                        {"beta_max", num(engine.beta_max)},
                        {"sample_steps", std::to_string(engine.sample_steps)},
                        {"output_dir", output_dir},
                        {"write_checkpoint", BoolText(write_checkpoint)},
                    });
  return e;
}

KeyMap LoadKeys(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw Error(ErrorKind::kIO, "cannot read config " + path);
  } catch (const YAML::ParserException& e) {
    throw Error(ErrorKind::kParse, path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) return {};
  if (!root.IsMap()) throw Error(ErrorKind::kConfig, path + ": top level must be a key: value mapping");
  KeyMap keys;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (kv.second.IsMap()) {
      throw Error(ErrorKind::kConfig, Where(path, kv.second, key) + ": nested mappings are not supported");
    }
    keys[key] = kv.second;
  }
  return keys;
}

RunConfig ParseRunConfig(const KeyMap& keys, const std::string& source) {
  RunConfig c;
  bool has_space = false, has_paradigm = false;
  for (const auto& [key, node] : keys) {
    if (key.rfind("target.", 0) == 0) {
      c.target_params[key.substr(7)] = As<double>(node, key, source, "a real number");
      continue;
    }
    static const std::map<std::string, std::function<void(RunConfig&, const YAML::Node&, const std::string&,
                                                          const std::string&)>>
        kSetters = {
            {"space",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               try {
                 c.space = ParseSpace(As<std::string>(n, k, s, "r3 or so3"));
               } catch (const Error& e) {
                 throw Error(ErrorKind::kConfig, Where(s, n, k) + ": expected r3 or so3");
               }
             }},
            {"paradigm",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               try {
                 c.paradigm = ParseParadigm(As<std::string>(n, k, s, "ddpm, score or flow"));
               } catch (const Error& e) {
                 throw Error(ErrorKind::kConfig, Where(s, n, k) + ": expected ddpm, score or flow");
               }
             }},
            {"target",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.target = As<std::string>(n, k, s, "a target name");
             }},
            {"n_target",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               const long v = As<long>(n, k, s, "an integer");
               Require(v >= 1, s, n, k, "must be >= 1");
               c.n_target = static_cast<std::size_t>(v);
             }},
            {"epochs",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.train.epochs = As<int>(n, k, s, "an integer");
               Require(c.train.epochs >= 1, s, n, k, "must be >= 1");
             }},
            {"batch_size",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.train.batch_size = As<int>(n, k, s, "an integer");
               Require(c.train.batch_size >= 1, s, n, k, "must be >= 1");
             }},
            {"eval_every",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.train.eval_every = As<int>(n, k, s, "an integer");
               Require(c.train.eval_every >= 1, s, n, k, "must be >= 1");
             }},
            {"eval_n",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               const long v = As<long>(n, k, s, "an integer");
               Require(v >= 1, s, n, k, "must be >= 1");
               c.train.eval_n = static_cast<std::size_t>(v);
             }},
            {"seed",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.train.seed = As<std::uint64_t>(n, k, s, "a nonnegative integer");
             }},
            {"target_seed",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.target_seed = As<std::uint64_t>(n, k, s, "a nonnegative integer");
             }},
            {"hidden",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.net.hidden = AsList<int>(n, k, s, "integers");
               for (int h : c.engine.net.hidden) Require(h >= 1, s, n, k, "layer widths must be >= 1");
             }},
            {"time_dim",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.net.time_dim = As<int>(n, k, s, "an integer");
               Require(c.engine.net.time_dim >= 2 && c.engine.net.time_dim % 2 == 0, s, n, k,
                       "must be a positive even integer");
             }},
            {"activation",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               const auto a = As<std::string>(n, k, s, "gelu or tanh");
               Require(a == "gelu" || a == "tanh", s, n, k, "expected gelu or tanh");
               c.engine.net.activation = a == "gelu" ? Activation::kGelu : Activation::kTanh;
             }},
            {"learning_rate",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.adam.learning_rate = As<double>(n, k, s, "a real number");
               Require(c.engine.adam.learning_rate > 0.0, s, n, k, "must be positive");
             }},
            {"lr_decay",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               const auto d = As<std::string>(n, k, s, "cosine or none");
               Require(d == "cosine" || d == "none", s, n, k, "expected cosine or none");
               c.train.lr_decay = d == "cosine" ? LrDecay::kCosine : LrDecay::kNone;
             }},
            {"final_lr_fraction",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.train.final_lr_fraction = As<double>(n, k, s, "a real number");
               Require(c.train.final_lr_fraction > 0.0 && c.train.final_lr_fraction <= 1.0, s, n, k,
                       "must lie in (0, 1]");
             }},
            {"ema_decay",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.ema_decay = As<double>(n, k, s, "a real number");
               Require(c.engine.ema_decay >= 0.0 && c.engine.ema_decay < 1.0, s, n, k, "must lie in [0, 1)");
             }},
            {"ddpm_steps",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.ddpm_steps = As<int>(n, k, s, "an integer");
               Require(c.engine.ddpm_steps >= 2, s, n, k, "must be >= 2");
             }},
            {"beta_min",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.beta_min = As<double>(n, k, s, "a real number");
               Require(c.engine.beta_min > 0.0, s, n, k, "must be positive");
             }},
            {"beta_max",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.beta_max = As<double>(n, k, s, "a real number");
               Require(c.engine.beta_max > 0.0, s, n, k, "must be positive");
             }},
            {"sample_steps",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.engine.sample_steps = As<int>(n, k, s, "an integer");
               Require(c.engine.sample_steps >= 1, s, n, k, "must be >= 1");
             }},
            {"output_dir",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.output_dir = As<std::string>(n, k, s, "a path");
             }},
            {"write_checkpoint",
             [](RunConfig& c, const YAML::Node& n, const std::string& k, const std::string& s) {
               c.write_checkpoint = As<bool>(n, k, s, "true or false");
             }},
        };
    const auto it = kSetters.find(key);
    if (it == kSetters.end()) throw Error(ErrorKind::kConfig, Where(source, node, key) + ": unknown key");
    it->second(c, node, key, source);
    has_space |= key == "space";
    has_paradigm |= key == "paradigm";
  }
  if (!has_space) throw Error(ErrorKind::kConfig, source + ": missing key 'space'");
  if (!has_paradigm) throw Error(ErrorKind::kConfig, source + ": missing key 'paradigm'");
  if (c.target.empty()) throw Error(ErrorKind::kConfig, source + ": missing key 'target'");
  if (c.engine.beta_max < c.engine.beta_min) {
    throw Error(ErrorKind::kConfig, source + ": beta_max must be >= beta_min");
  }
  c.engine.seed = DeriveSeed(c.train.seed, kEngineStream);
  // Surfaces unknown targets and parameters while still parsing.
  auto known = TargetParams(c.space, c.target);
  for (const auto& [k, v] : c.target_params) {
    if (!known.count(k)) {
      throw Error(ErrorKind::kConfig, Where(source, keys.at("target." + k), "target." + k) + ": target '" +
                                          c.target + "' has no such parameter");
    }
  }
  return c;
}

RunConfig LoadRunConfig(const std::string& path) { return ParseRunConfig(LoadKeys(path), path); }

std::uint64_t CellSeed(std::uint64_t master, Space space, Paradigm paradigm) {
  const auto stream = 3 * static_cast<std::uint64_t>(space) + static_cast<std::uint64_t>(paradigm);
  return DeriveSeed(master, 100 + stream);
}

RunConfig SweepConfig::Cell(Space space, Paradigm paradigm, std::uint64_t seed) const {
  const std::string sp = std::string(SpaceName(space)) + ".";
  const std::string pa = std::string(ParadigmName(paradigm)) + ".";
  KeyMap merged;
  auto is_prefixed = [](const std::string& key) {
    for (const char* p : {"r3.", "so3.", "ddpm.", "score.", "flow."}) {
      if (key.rfind(p, 0) == 0) return true;
    }
    return false;
  };
  // YAML::Node::operator= writes through to the shared node, so entries are
  // replaced rather than assigned; otherwise an override would leak into base.
  auto put = [&](const std::string& key, const YAML::Node& node) {
    merged.erase(key);
    merged.emplace(key, node);
  };
  for (const auto& [k, v] : base) {
    if (!is_prefixed(k)) put(k, v);
  }
  for (const auto& prefix : {sp, pa}) {
    for (const auto& [k, v] : base) {
      if (k.rfind(prefix, 0) == 0) put(k.substr(prefix.size()), v);
    }
  }
  put("space", YAML::Node(std::string(SpaceName(space))));
  put("paradigm", YAML::Node(std::string(ParadigmName(paradigm))));
  RunConfig c = ParseRunConfig(merged, source);
  c.train.seed = CellSeed(seed, space, paradigm);
  c.engine.seed = DeriveSeed(c.train.seed, kEngineStream);
  // All cells of one master seed share their target sets.
  if (!c.target_seed) c.target_seed = seed;
  return c;
}

SweepConfig ParseSweepConfig(const KeyMap& keys, const std::string& source) {
  SweepConfig s;
  s.source = source;
  s.spaces = {Space::kR3, Space::kSO3};
  s.paradigms = {Paradigm::kDdpm, Paradigm::kScore, Paradigm::kFlow};
  s.seeds = {0};
  for (const auto& [key, node] : keys) {
    if (key == "sweep.spaces") {
      s.spaces.clear();
      for (const auto& name : AsList<std::string>(node, key, source, "space names")) {
        try {
          s.spaces.push_back(ParseSpace(name));
        } catch (const Error&) {
          throw Error(ErrorKind::kConfig, Where(source, node, key) + ": unknown space '" + name + "'");
        }
      }
    } else if (key == "sweep.paradigms") {
      s.paradigms.clear();
      for (const auto& name : AsList<std::string>(node, key, source, "paradigm names")) {
        try {
          s.paradigms.push_back(ParseParadigm(name));
        } catch (const Error&) {
          throw Error(ErrorKind::kConfig, Where(source, node, key) + ": unknown paradigm '" + name + "'");
        }
      }
    } else if (key == "sweep.seeds") {
      s.seeds = AsList<std::uint64_t>(node, key, source, "nonnegative integers");
    } else if (key == "sweep.threads") {
      s.threads = As<int>(node, key, source, "an integer");
      Require(s.threads >= 1, source, node, key, "must be >= 1");
    } else if (key.rfind("sweep.", 0) == 0) {
      throw Error(ErrorKind::kConfig, Where(source, node, key) + ": unknown key");
    } else if (key == "space" || key == "paradigm" || key == "seed") {
      throw Error(ErrorKind::kConfig, Where(source, node, key) + ": set by the grid; use sweep." + key + "s");
    } else {
      s.base[key] = node;
      if (key == "output_dir") s.output_dir = As<std::string>(node, key, source, "a path");
    }
  }
  // Parse every cell up front so config errors surface before any training.
  for (Space sp : s.spaces)
    for (Paradigm p : s.paradigms) s.Cell(sp, p, s.seeds.front());
  return s;
}

SweepConfig LoadSweepConfig(const std::string& path) { return ParseSweepConfig(LoadKeys(path), path); }

}  // namespace se3lab::runner
