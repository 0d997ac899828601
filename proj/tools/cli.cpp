#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "topoattn/cubical.hpp"
#include "topoattn/error.hpp"
#include "topoattn/io.hpp"
#include "topoattn/sdi.hpp"
#include "topoattn/ssm.hpp"

namespace topoattn::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string format_ms(double ms) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", ms);
  return buf;
}

// Registers the attention flags shared by `attn` and `batch`.
void add_attention_flags(CLI::App& cmd, AttnConfig& config) {
  cmd.add_option("--percentile", config.percentile, "significance percentile")
      ->check(CLI::Range(0.0, 100.0))
      ->capture_default_str();
  cmd.add_option("--tolerance", config.birth_tolerance, "birth-level tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd.add_option("--scale", config.scale, "divisor applied to scores before the sigmoid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_flag("--normalize", config.normalize, "divide scores by the image maximum");
  cmd.add_flag("--per-dimension{false}", config.pool_dimensions,
               "take the percentile per homology dimension instead of pooled");
  cmd.add_option("--max-level", config.max_level, "top of the quantized level scale")
      ->check(CLI::Range(1, kMaxLevelLimit))
      ->capture_default_str();
}

int cmd_pd(const fs::path& input, const fs::path& output, Level max_level, std::ostream& out) {
  const LevelMap levels = quantize(load_pgm(input), max_level);
  const PersistenceDiagram pd = compute_persistence(build_filtration(levels));
  write_file_atomic(output, diagram_to_csv(pd));
  out << "pairs=" << pd.pairs.size() << "\n";
  return kOk;
}

int cmd_attn(const fs::path& input, const fs::path& output, const AttnConfig& config) {
  const AttentionMap map = generate_attention_map(load_pgm(input), config);
  write_file_atomic(output, encode_attention(map, format_for(output)));
  return kOk;
}

int cmd_betti(const fs::path& input, Level threshold, int dim, Level max_level,
              std::ostream& out) {
  const LevelMap levels = quantize(load_pgm(input), max_level);
  out << betti_oracle(levels, threshold, dim) << "\n";
  return kOk;
}

int cmd_ssm_check(std::size_t state_dim, std::size_t length, std::size_t trials,
                  std::uint64_t seed, std::ostream& out) {
  constexpr double kTolerance = 1e-6;
  const auto report = ssm::check_duality(state_dim, length, trials, seed);
  char buf[160];
  std::snprintf(buf, sizeof buf, "max_abs_error=%.6e trials=%zu state_dim=%zu length=%zu",
                report.max_abs_error, report.trials, state_dim, length);
  const bool pass = report.max_abs_error <= kTolerance;
  out << buf << "\n" << (pass ? "PASS" : "FAIL") << "\n";
  return pass ? kOk : kInternal;
}

AttentionMap load_attention(const fs::path& path) {
  const GridMap grid = format_for(path) == OutputFormat::kPgm ? load_pgm(path) : load_tensor(path);
  AttentionMap map{grid.width(), grid.height(), {}};
  map.weights.reserve(grid.size());
  for (float v : grid.values()) {
    if (v < 0.0f || v > 1.0f) throw ValidationError("attention weights must lie in [0, 1]");
    map.weights.push_back(v);
  }
  return map;
}

int cmd_fuse(const std::vector<std::string>& features, const fs::path& attention,
             const std::string& prefix, std::ostream& out) {
  sdi::ScalePyramid pyramid;
  for (const auto& f : features) pyramid.features.push_back(load_feature(f));
  const auto fused = sdi::topo_sdi(pyramid, load_attention(attention));
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const std::string path = prefix + "_scale" + std::to_string(i + 1) + ".tnsr";
    save_feature(fused[i], path);
    out << path << " " << fused[i].height() << "x" << fused[i].width() << "x"
        << fused[i].channels() << "\n";
  }
  return kOk;
}

int cmd_batch(const BatchOptions& options, std::ostream& out) {
  const BatchReport r = run_batch(options);
  out << "images=" << r.images << " mean_ms=" << format_ms(r.mean_ms)
      << " total_ms=" << format_ms(r.total_ms) << "\n";
  return kOk;
}

}  // namespace

OutputFormat format_for(const fs::path& path) {
  return path.extension() == ".pgm" ? OutputFormat::kPgm : OutputFormat::kTensor;
}

std::string encode_attention(const AttentionMap& map, OutputFormat format) {
  if (format == OutputFormat::kPgm) return encode_pgm(map.to_levels());
  const GridMap grid = map.to_grid();
  return encode_tensor(RawTensor{{grid.height(), grid.width()},
                                 {grid.values().begin(), grid.values().end()}});
}

BatchReport run_batch(const BatchOptions& options) {
  options.config.validate();
  if (options.jobs == 0) throw ValidationError("jobs must be at least 1");
  std::error_code ec;
  if (!fs::is_directory(options.input_dir, ec)) {
    throw IoError("input directory " + options.input_dir.string() + " does not exist");
  }
  fs::create_directories(options.output_dir, ec);
  if (ec) throw IoError("cannot create output directory " + options.output_dir.string());

  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(options.input_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      inputs.push_back(entry.path());
    }
  }
  std::sort(inputs.begin(), inputs.end());

  const char* ext = options.format == OutputFormat::kPgm ? ".pgm" : ".tnsr";
  std::vector<double> per_image(inputs.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        const auto start = Clock::now();
        const AttentionMap map = generate_attention_map(load_pgm(inputs[i]), options.config);
        fs::path target = options.output_dir / inputs[i].filename();
        target.replace_extension(ext);
        write_file_atomic(target, encode_attention(map, options.format));
        per_image[i] = elapsed_ms(start);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = inputs.size();
      }
    }
  };

  const auto start = Clock::now();
  const std::size_t threads = std::min(options.jobs, std::max<std::size_t>(inputs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  BatchReport report;
  report.images = inputs.size();
  report.total_ms = elapsed_ms(start);
  if (!inputs.empty()) {
    double sum = 0.0;
    for (double ms : per_image) sum += ms;
    report.mean_ms = sum / static_cast<double>(inputs.size());
  }
  return report;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology attention maps from probability maps via cubical persistent homology",
               "topoattn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(TOPOATTN_VERSION));

  std::string input;
  std::string output;
  Level max_level = kDefaultMaxLevel;

  auto* pd = app.add_subcommand("pd", "write the persistence diagram of a PGM as CSV");
  pd->add_option("input,--input", input, "input PGM")->required();
  pd->add_option("output,--output", output, "output CSV")->required();
  pd->add_option("--max-level", max_level)->check(CLI::Range(1, kMaxLevelLimit));

  AttnConfig attn_config;
  auto* attn = app.add_subcommand("attn", "write the topology attention map of a PGM");
  attn->add_option("input,--input", input, "input PGM")->required();
  attn->add_option("output,--output", output, "output .tnsr or .pgm")->required();
  add_attention_flags(*attn, attn_config);

  Level threshold = 0;
  int dim = 0;
  auto* betti = app.add_subcommand("betti", "print a Betti number of the sublevel set");
  betti->add_option("input,--input", input, "input PGM")->required();
  betti->add_option("--threshold", threshold)->required()->check(CLI::NonNegativeNumber);
  betti->add_option("--dim", dim)->required()->check(CLI::IsMember({0, 1}));
  betti->add_option("--max-level", max_level)->check(CLI::Range(1, kMaxLevelLimit));

  std::size_t state_dim = 16;
  std::size_t length = 64;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  auto* ssm_check = app.add_subcommand("ssm-check", "check recurrence/convolution agreement");
  ssm_check->add_option("--state-dim", state_dim)->check(CLI::PositiveNumber)->capture_default_str();
  ssm_check->add_option("--length", length)->check(CLI::PositiveNumber)->capture_default_str();
  ssm_check->add_option("--trials", trials)->check(CLI::PositiveNumber)->capture_default_str();
  ssm_check->add_option("--seed", seed)->capture_default_str();

  std::vector<std::string> features;
  std::string attention;
  std::string prefix;
  auto* fuse = app.add_subcommand("fuse", "multi-scale fusion of TNSR features with attention");
  fuse->add_option("--features", features, "four (height, width, channels) TNSR files")
      ->required()
      ->expected(4);
  fuse->add_option("--attention", attention, "attention map (.tnsr or .pgm)")->required();
  fuse->add_option("--output-prefix", prefix, "outputs are <prefix>_scale<i>.tnsr")->required();

  BatchOptions batch_options;
  std::string batch_format = "tnsr";
  auto* batch = app.add_subcommand("batch", "attention maps for every PGM in a directory");
  batch->add_option("--input-dir", batch_options.input_dir)->required();
  batch->add_option("--output-dir", batch_options.output_dir)->required();
  batch->add_option("--jobs", batch_options.jobs)->check(CLI::PositiveNumber)->capture_default_str();
  batch->add_option("--format", batch_format)->check(CLI::IsMember({"tnsr", "pgm"}));
  add_attention_flags(*batch, batch_options.config);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "topoattn: error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*pd) return cmd_pd(input, output, max_level, out);
    if (*attn) return cmd_attn(input, output, attn_config);
    if (*betti) return cmd_betti(input, threshold, dim, max_level, out);
    if (*ssm_check) return cmd_ssm_check(state_dim, length, trials, seed, out);
    if (*fuse) return cmd_fuse(features, attention, prefix, out);
    if (*batch) {
      batch_options.format = batch_format == "pgm" ? OutputFormat::kPgm : OutputFormat::kTensor;
      return cmd_batch(batch_options, out);
    }
  } catch (const IoError& e) {
    err << "topoattn: io error: " << e.what() << "\n";
    return kIo;
  } catch (const ParseError& e) {
    err << "topoattn: parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    err << "topoattn: invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "topoattn: internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace topoattn::cli
