// tenkit command line: extract structural features from FROSTT tensors,
// generate synthetic tensors from target features, and round-trip / compare /
// benchmark the two.
//
// Exit codes: 0 success, 1 I/O or format problem, 2 infeasible or unsupported
// request, 3 comparison mismatch.
//
// stdout carries only deterministic machine-readable output (feature text,
// summary key=value lines, tables); wall-clock timings and worker counts are
// diagnostics and go to stderr -- except `bench`, whose entire point is
// timing, and which is therefore exempt from byte-for-byte reproducibility.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tenkit/extract.hpp"
#include "tenkit/frostt.hpp"
#include "tenkit/generator.hpp"

using namespace tenkit;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

std::vector<u64> parse_dims(const std::string& s) {
  std::vector<u64> dims;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      dims.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw ParseError("bad dims entry '" + tok + "' in '" + s + "'");
    }
  }
  if (dims.empty()) throw ParseError("empty dims list");
  return dims;
}

CooTensor load_tensor(const std::string& path, const std::string& dims_flag) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  LoadOptions opts;
  if (!dims_flag.empty()) opts.declared_dims = parse_dims(dims_flag);
  return load_frostt(in, opts);
}

FeatureFormat pick_format(const std::string& fmt, const std::string& path) {
  if (fmt == "json") return FeatureFormat::kJson;
  if (fmt == "csv") return FeatureFormat::kCsv;
  if (!fmt.empty()) throw ParseError("unknown feature format '" + fmt + "'");
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv") return FeatureFormat::kCsv;
  return FeatureFormat::kJson;
}

FeatureSet load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  std::size_t i = text.find_first_not_of(" \t\r\n");
  if (i == std::string::npos) throw ParseError("'" + path + "' is empty");
  return deserialize(text, text[i] == '{' ? FeatureFormat::kJson : FeatureFormat::kCsv);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw FormatError("failed writing '" + path + "'");
}

// Config file support: a flat JSON object whose keys are the long option
// names.  Explicit command-line flags win over config values.
nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
}

template <class T>
void cfg_apply(const nlohmann::json& cfg, const CLI::App* app, const std::string& flag, T& var) {
  const CLI::Option* opt = app->get_option("--" + flag);
  if (opt->count() > 0 || !cfg.contains(flag)) return;
  try {
    if constexpr (std::is_same_v<T, std::string>) {
      if (cfg[flag].is_string())
        var = cfg[flag].get<std::string>();
      else
        var = cfg[flag].dump();
    } else {
      var = cfg[flag].get<T>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config key '" + flag + "': " + e.what());
  }
}

ExtractOptions make_extract_options(const std::string& method, const std::string& modes,
                                    double lambda, unsigned threads) {
  ExtractOptions o;
  o.method = method_from_name(method);
  if (modes == "all")
    o.scope = Scope::kAllModes;
  else if (modes == "top3")
    o.scope = Scope::kTop3;
  else
    throw ParseError("unknown scope '" + modes + "' (expected all or top3)");
  o.lambda = lambda;
  o.threads = threads;
  return o;
}

std::string fmt(double v) { return format_double_shortest(v); }

// ---------------------------------------------------------------------------
// roundtrip table
// ---------------------------------------------------------------------------

struct AxisFeatures {
  double d_nz, d_fib, d_slc;
  double avg_fib, cv_fib, imbal_fib;
  double avg_nz, cv_nz, imbal_nz;
  double nnz;
};

// Reads the generation-axis features out of a feature set (see
// spec_from_features for the axis selection rule).
AxisFeatures axis_features(const FeatureSet& fs) {
  GeneratorSpec s = spec_from_features(fs);
  AxisFeatures a;
  a.d_nz = double(fs.global.nnz) / prod_double(s.dims);
  a.d_slc = s.d_slc;
  a.avg_fib = s.avg_fib;
  a.cv_fib = s.cv_fib;
  a.imbal_fib = s.imbal_fib;
  a.avg_nz = s.avg_nz;
  a.cv_nz = s.cv_nz;
  a.imbal_nz = s.imbal_nz;
  a.nnz = double(fs.global.nnz);
  // Fiber density along the generation axes: realized fibers over the
  // fiber-position grid.
  a.d_fib = s.d_slc * s.avg_fib / double(s.dims[1]);
  return a;
}

const char* band_label(double ratio) {
  if (ratio >= 0.9 && ratio <= 1.1) return "green";
  if (ratio < 0.5 || ratio > 2.0) return "red";
  return "orange";
}

void print_roundtrip_row(std::ostream& out, const char* name, double orig, double gen,
                         bool unstable) {
  out << name << "," << fmt(orig) << "," << fmt(gen) << ",";
  if (orig == 0.0 || unstable) {
    out << "-,-\n";
    return;
  }
  double ratio = gen / orig;
  out << fmt(ratio) << "," << band_label(ratio) << "\n";
}

void print_roundtrip_table(std::ostream& out, const AxisFeatures& o, const AxisFeatures& g) {
  out << "feature,original,generated,ratio,label\n";
  print_roundtrip_row(out, "nnz", o.nnz, g.nnz, false);
  print_roundtrip_row(out, "d_nz", o.d_nz, g.d_nz, false);
  print_roundtrip_row(out, "d_fib", o.d_fib, g.d_fib, false);
  print_roundtrip_row(out, "d_slc", o.d_slc, g.d_slc, false);
  print_roundtrip_row(out, "avg_fib", o.avg_fib, g.avg_fib, false);
  // cv ratios are noise once the target spread is negligible.
  print_roundtrip_row(out, "cv_fib", o.cv_fib, g.cv_fib, o.cv_fib < 0.1);
  print_roundtrip_row(out, "imbal_fib", o.imbal_fib, g.imbal_fib, o.imbal_fib < 0.1);
  print_roundtrip_row(out, "avg_nz", o.avg_nz, g.avg_nz, false);
  print_roundtrip_row(out, "cv_nz", o.cv_nz, g.cv_nz, o.cv_nz < 0.1);
  print_roundtrip_row(out, "imbal_nz", o.imbal_nz, g.imbal_nz, o.imbal_nz < 0.1);
}

int g_exit = 0;

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

void setup_extract(CLI::App& app) {
  auto* sub = app.add_subcommand("extract", "Extract structural features from a .tns tensor");
  auto input = std::make_shared<std::string>();
  auto output = std::make_shared<std::string>();
  auto format = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>("hybrid");
  auto modes = std::make_shared<std::string>("top3");
  auto lambda = std::make_shared<double>(1e11);
  auto threads = std::make_shared<unsigned>(0);  // 0 = all cores
  auto dims = std::make_shared<std::string>();
  auto config = std::make_shared<std::string>();
  sub->add_option("input", *input, "input tensor (.tns)")->required();
  sub->add_option("-o,--output", *output, "write features here (default: stdout)");
  sub->add_option("--format", *format, "feature format: json or csv");
  sub->add_option("--method", *method, "hash | sort | group | hybrid");
  sub->add_option("--modes", *modes, "scope: all | top3");
  sub->add_option("--lambda", *lambda, "hybrid dispatch threshold");
  sub->add_option("--threads", *threads, "worker count (0 = all cores)");
  sub->add_option("--dims", *dims, "declared dims, comma separated");
  sub->add_option("--config", *config, "JSON config file (flags win)");

  sub->callback([=, &app]() {
    nlohmann::json cfg = load_config(*config);
    const CLI::App* s = app.get_subcommand("extract");
    cfg_apply(cfg, s, "method", *method);
    cfg_apply(cfg, s, "modes", *modes);
    cfg_apply(cfg, s, "lambda", *lambda);
    cfg_apply(cfg, s, "threads", *threads);
    cfg_apply(cfg, s, "format", *format);
    cfg_apply(cfg, s, "dims", *dims);

    Timer timer;
    CooTensor t = load_tensor(*input, *dims);
    ExtractOptions opts = make_extract_options(*method, *modes, *lambda, *threads);
    FeatureSet fs = extract(t, opts);
    std::string text = serialize(fs, pick_format(*format, *output));
    if (output->empty()) {
      std::cout << text;
    } else {
      write_text(*output, text);
      std::cout << "extract ok input=" << *input << " output=" << *output
                << " nnz=" << fs.global.nnz << " blocks=" << fs.blocks.size()
                << " features=" << fs.scalar_count() << " method=" << fs.meta.method
                << " scope=" << fs.meta.scope << "\n";
    }
    std::cerr << "extract: wall_ms=" << timer.ms()
              << " workers=" << resolve_threads(*threads) << "\n";
  });
}

GeneratorSpec spec_from_flags(const std::string& features, const std::string& dims,
                              double d_slc, double avg_fib, double d_fib, double cv_fib,
                              double imbal_fib, double avg_nz, double d_nz, double cv_nz,
                              double imbal_nz, bool have[11]) {
  GeneratorSpec spec;
  if (!features.empty()) spec = spec_from_features(load_features(features), {});
  if (have[0]) spec.dims = parse_dims(dims);
  if (spec.dims.size() < 3)
    throw UnsupportedOrderError("generation needs at least three dims (given " +
                                std::to_string(spec.dims.size()) + ")");
  if (have[1]) spec.d_slc = d_slc;
  if (have[2]) spec.avg_fib = avg_fib;
  if (have[4]) spec.cv_fib = cv_fib;
  if (have[5]) spec.imbal_fib = imbal_fib;
  if (have[6]) spec.avg_nz = avg_nz;
  if (have[8]) spec.cv_nz = cv_nz;
  if (have[9]) spec.imbal_nz = imbal_nz;

  // Density forms of the two averages; direct averages win if both given.
  const std::size_t order = spec.dims.size();
  u64 nslc = static_cast<u64>(round_half_away(spec.d_slc * double(slice_space(spec))));
  if (have[3] && !have[2]) {
    if (nslc == 0) throw EmptySpecError("d_slc rounds to zero slices");
    spec.avg_fib = d_fib * prod_double({spec.dims.data(), order - 1}) / double(nslc);
  }
  if (have[7] && !have[6]) {
    if (nslc == 0) throw EmptySpecError("d_slc rounds to zero slices");
    double nfib = double(nslc) * spec.avg_fib;
    if (nfib <= 0) throw InfeasibleSpecError("d_nz given but no fibers to spread over");
    spec.avg_nz = d_nz * prod_double(spec.dims) / nfib;
  }
  return spec;
}

void setup_generate(CLI::App& app) {
  auto* sub = app.add_subcommand("generate", "Generate a tensor matching target features");
  auto output = std::make_shared<std::string>();
  auto features = std::make_shared<std::string>();
  auto dims = std::make_shared<std::string>();
  auto d_slc = std::make_shared<double>(1.0);
  auto avg_fib = std::make_shared<double>(1.0);
  auto d_fib = std::make_shared<double>(0.0);
  auto cv_fib = std::make_shared<double>(0.0);
  auto imbal_fib = std::make_shared<double>(0.0);
  auto avg_nz = std::make_shared<double>(1.0);
  auto d_nz = std::make_shared<double>(0.0);
  auto cv_nz = std::make_shared<double>(0.0);
  auto imbal_nz = std::make_shared<double>(0.0);
  auto seed = std::make_shared<u64>(0);
  auto threads = std::make_shared<unsigned>(0);  // 0 = all cores
  auto config = std::make_shared<std::string>();
  sub->add_option("-o,--output", *output, "write the tensor here (default: stdout)");
  sub->add_option("--features", *features, "feature file to target (json or csv)");
  sub->add_option("--dims", *dims, "dims, comma separated (e.g. 100,80,60)");
  sub->add_option("--d-slc", *d_slc, "nonzero slice density in (0,1]");
  sub->add_option("--avg-fib", *avg_fib, "mean fibers per nonzero slice");
  sub->add_option("--d-fib", *d_fib, "fiber density (alternative to --avg-fib)");
  sub->add_option("--cv-fib", *cv_fib, "cv of fibers per slice");
  sub->add_option("--imbal-fib", *imbal_fib, "imbalance of fibers per slice, [0,1)");
  sub->add_option("--avg-nz", *avg_nz, "mean nonzeros per nonzero fiber");
  sub->add_option("--d-nz", *d_nz, "nonzero density (alternative to --avg-nz)");
  sub->add_option("--cv-nz", *cv_nz, "cv of nonzeros per fiber");
  sub->add_option("--imbal-nz", *imbal_nz, "imbalance of nonzeros per fiber, [0,1)");
  sub->add_option("--seed", *seed, "master seed");
  sub->add_option("--threads", *threads, "worker count (0 = all cores)");
  sub->add_option("--config", *config, "JSON config file (flags win)");

  sub->callback([=, &app]() {
    nlohmann::json cfg = load_config(*config);
    CLI::App* s = app.get_subcommand("generate");
    cfg_apply(cfg, s, "features", *features);
    cfg_apply(cfg, s, "dims", *dims);
    cfg_apply(cfg, s, "d-slc", *d_slc);
    cfg_apply(cfg, s, "avg-fib", *avg_fib);
    cfg_apply(cfg, s, "d-fib", *d_fib);
    cfg_apply(cfg, s, "cv-fib", *cv_fib);
    cfg_apply(cfg, s, "imbal-fib", *imbal_fib);
    cfg_apply(cfg, s, "avg-nz", *avg_nz);
    cfg_apply(cfg, s, "d-nz", *d_nz);
    cfg_apply(cfg, s, "cv-nz", *cv_nz);
    cfg_apply(cfg, s, "imbal-nz", *imbal_nz);
    cfg_apply(cfg, s, "seed", *seed);
    cfg_apply(cfg, s, "threads", *threads);

    auto given = [&](const char* name) {
      return s->get_option(name)->count() > 0 || cfg.contains(name + 2);
    };
    bool have[11] = {given("--dims"),   given("--d-slc"),    given("--avg-fib"),
                     given("--d-fib"),  given("--cv-fib"),   given("--imbal-fib"),
                     given("--avg-nz"), given("--d-nz"),     given("--cv-nz"),
                     given("--imbal-nz"), false};

    Timer timer;
    GeneratorSpec spec =
        spec_from_flags(*features, *dims, *d_slc, *avg_fib, *d_fib, *cv_fib, *imbal_fib,
                        *avg_nz, *d_nz, *cv_nz, *imbal_nz, have);
    spec.seed = *seed;
    spec.threads = *threads;
    GenResult r = generate(spec);

    std::ostringstream body;
    write_frostt(r.tensor, body);
    if (output->empty()) {
      std::cout << body.str();
    } else {
      write_text(*output, body.str());
      std::cout << "generate ok output=" << *output << " nslc=" << r.stats.nslc
                << " nfib=" << r.stats.nfib << " nnz=" << r.stats.nnz
                << " clamped_fib=" << r.stats.clamped_fib
                << " clamped_nz=" << r.stats.clamped_nz
                << " scaled_fib=" << (r.stats.scaled_fib ? 1 : 0)
                << " scaled_nz=" << (r.stats.scaled_nz ? 1 : 0) << " seed=" << spec.seed
                << "\n";
    }
    std::cerr << "generate: wall_ms=" << timer.ms()
              << " workers=" << resolve_threads(*threads) << "\n";
  });
}

void setup_roundtrip(CLI::App& app) {
  auto* sub = app.add_subcommand(
      "roundtrip", "Extract, regenerate from the features, re-extract, and compare");
  auto input = std::make_shared<std::string>();
  auto method = std::make_shared<std::string>("hybrid");
  auto modes = std::make_shared<std::string>("top3");
  auto lambda = std::make_shared<double>(1e11);
  auto threads = std::make_shared<unsigned>(0);  // 0 = all cores
  auto seed = std::make_shared<u64>(0);
  auto dims = std::make_shared<std::string>();
  auto gen_out = std::make_shared<std::string>();
  auto config = std::make_shared<std::string>();
  sub->add_option("input", *input, "input tensor (.tns)")->required();
  sub->add_option("--method", *method, "hash | sort | group | hybrid");
  sub->add_option("--modes", *modes, "scope: all | top3");
  sub->add_option("--lambda", *lambda, "hybrid dispatch threshold");
  sub->add_option("--threads", *threads, "worker count (0 = all cores)");
  sub->add_option("--seed", *seed, "master seed for the regeneration");
  sub->add_option("--dims", *dims, "override generated dims, comma separated");
  sub->add_option("--gen-out", *gen_out, "also write the regenerated tensor here");
  sub->add_option("--config", *config, "JSON config file (flags win)");

  sub->callback([=, &app]() {
    nlohmann::json cfg = load_config(*config);
    const CLI::App* s = app.get_subcommand("roundtrip");
    cfg_apply(cfg, s, "method", *method);
    cfg_apply(cfg, s, "modes", *modes);
    cfg_apply(cfg, s, "lambda", *lambda);
    cfg_apply(cfg, s, "threads", *threads);
    cfg_apply(cfg, s, "seed", *seed);
    cfg_apply(cfg, s, "dims", *dims);

    Timer timer;
    CooTensor t = load_tensor(*input, "");
    ExtractOptions opts = make_extract_options(*method, *modes, *lambda, *threads);
    FeatureSet original = extract(t, opts);

    std::vector<u64> dims_override;
    if (!dims->empty()) dims_override = parse_dims(*dims);
    GeneratorSpec spec = spec_from_features(original, dims_override);
    spec.seed = *seed;
    spec.threads = *threads;
    GenResult r = generate(spec);
    if (!gen_out->empty()) {
      std::ostringstream body;
      write_frostt(r.tensor, body);
      write_text(*gen_out, body.str());
    }

    ExtractOptions re = opts;
    re.scope = Scope::kAllModes;  // the regenerated tensor is order 3
    FeatureSet regenerated = extract(r.tensor, re);
    print_roundtrip_table(std::cout, axis_features(original), axis_features(regenerated));
    std::cerr << "roundtrip: wall_ms=" << timer.ms() << " gen_nnz=" << r.stats.nnz
              << " clamp_frac_fib=" << r.stats.clamp_frac_fib()
              << " clamp_frac_nz=" << r.stats.clamp_frac_nz() << "\n";
  });
}

void setup_compare(CLI::App& app) {
  auto* sub = app.add_subcommand("compare", "Compare two feature files");
  auto a = std::make_shared<std::string>();
  auto b = std::make_shared<std::string>();
  auto tol = std::make_shared<double>(1e-12);
  sub->add_option("a", *a, "first feature file")->required();
  sub->add_option("b", *b, "second feature file")->required();
  sub->add_option("--tol", *tol, "relative tolerance for real-valued features");

  sub->callback([=]() {
    FeatureSet fa = load_features(*a);
    FeatureSet fb = load_features(*b);
    std::vector<std::string> diffs = compare_features(fa, fb, *tol);
    if (diffs.empty()) {
      std::cout << "compare ok tol=" << fmt(*tol) << "\n";
      return;
    }
    std::cout << "compare mismatch count=" << diffs.size() << " tol=" << fmt(*tol) << "\n";
    for (const std::string& d : diffs) std::cout << d << "\n";
    g_exit = static_cast<int>(ErrorCategory::kMismatch);
  });
}

void setup_bench(CLI::App& app) {
  auto* sub = app.add_subcommand("bench", "Time the count builders per mode order");
  auto input = std::make_shared<std::string>();
  auto methods = std::make_shared<std::string>("hash,sort,group,hybrid");
  auto reps = std::make_shared<unsigned>(1);
  auto lambda = std::make_shared<double>(1e11);
  auto threads = std::make_shared<unsigned>(0);  // 0 = all cores
  sub->add_option("input", *input, "input tensor (.tns)")->required();
  sub->add_option("--methods", *methods, "comma separated subset of hash,sort,group,hybrid");
  sub->add_option("--reps", *reps, "repetitions per cell");
  sub->add_option("--lambda", *lambda, "hybrid dispatch threshold");
  sub->add_option("--threads", *threads, "worker count (0 = all cores)");

  sub->callback([=]() {
    CooTensor t = load_tensor(*input, "");
    CooTensor working = t;
    if (t.order() > 3) working = project_top3(t, largest3_modes(t.dims));
    if (*reps < 1) throw DomainError("--reps must be >= 1");

    std::vector<Method> ms;
    std::stringstream ss(*methods);
    std::string tok;
    while (std::getline(ss, tok, ',')) ms.push_back(method_from_name(tok));

    std::cout << "method,mode_order,rep,metric,decision,wall_ms\n";
    for (Method m : ms) {
      for (std::size_t s = 0; s < 3; ++s) {
        ModeOrder mo{s, (s + 1) % 3, (s + 2) % 3};
        std::string label = std::to_string(mo[0] + 1) + "-" + std::to_string(mo[1] + 1) +
                            "-" + std::to_string(mo[2] + 1);
        double metric = dispatch_metric(working, mo);
        double total = 0;
        std::string decision;
        for (unsigned rep = 0; rep < *reps; ++rep) {
          ExtractOptions o;
          o.method = m;
          o.lambda = *lambda;
          o.threads = *threads;
          Timer timer;
          CountArrays ca = extract_counts(working, mo, o);
          double wall = timer.ms();
          total += wall;
          switch (ca.built_by) {
            case CountArrays::Path::kHash: decision = "hash"; break;
            case CountArrays::Path::kSort: decision = "sort"; break;
            case CountArrays::Path::kGroup: decision = "group"; break;
            case CountArrays::Path::kNone: decision = "none"; break;
          }
          std::cout << method_name(m) << "," << label << "," << rep << "," << fmt(metric)
                    << "," << decision << "," << fmt(wall) << "\n";
        }
        if (*reps > 1)
          std::cout << method_name(m) << "," << label << ",mean," << fmt(metric) << ","
                    << decision << "," << fmt(total / *reps) << "\n";
      }
    }
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tenkit: structural features of sparse tensors, and tensors from features"};
  app.require_subcommand(1);
  setup_extract(app);
  setup_generate(app);
  setup_roundtrip(app);
  setup_compare(app);
  setup_bench(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return g_exit;
}
