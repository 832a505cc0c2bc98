#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "sot/error.hpp"
#include "sot/image_io.hpp"
#include "sot/metrics.hpp"
#include "sot/model_io.hpp"
#include "sot/parallel.hpp"
#include "sot/pipeline.hpp"
#include "sot/synthesis.hpp"

namespace sot::cli {
namespace {

namespace fs = std::filesystem;

struct FitArgs {
  std::string content;
  std::string reference;
  std::string out_model;
  std::string loss_csv;
  std::string atlas_dir;
  FitConfig config;
};

struct TransferArgs {
  std::string model;
  std::string input;
  std::string out;
  std::string direction = "forward";
  int stride = 4;
  double rho = 0.01;
};

// Input problems map to exit 2; everything raised after inputs are loaded
// maps by error code.
class BadInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_fit_options(CLI::App& app, FitArgs& a, bool with_model_output) {
  FitConfig& c = a.config;
  app.add_option("--content", a.content, "Content image (PNG)")->required();
  app.add_option("--reference", a.reference, "Reference image (PNG)")->required();
  if (with_model_output) {
    app.add_option("--out-model", a.out_model, "Path of the trained model")->required();
  } else {
    app.add_option("--out-model", a.out_model, "Also save the trained model here");
  }
  app.add_option("--loss-csv", a.loss_csv, "Write the loss history as CSV");
  app.add_option("--atlas-dir", a.atlas_dir, "Write dict_x.png and dict_y.png atlases here");
  app.add_option("--patch-size", c.patch_size, "Patch side in pixels")->capture_default_str();
  app.add_option("--samples", c.sample_count, "Patches sampled per image")->capture_default_str();
  app.add_option("--dict-size", c.dict_size, "Atoms per dictionary")->capture_default_str();
  app.add_option("--omp-tol", c.omp_tol, "OMP residual stop (squared norm)")->capture_default_str();
  app.add_option("--omp-k", c.omp_max_atoms, "OMP maximum atoms per patch")->capture_default_str();
  app.add_option("--lambda", c.lambda, "Row-sum regularization weight")->capture_default_str();
  app.add_option("--tau", c.tau, "Marginal penalty weight (recorded only)")->capture_default_str();
  app.add_option("--gamma", c.gamma, "Transport term weight in the dictionary update")->capture_default_str();
  app.add_option("--eta", c.eta, "Entropic regularization (relative to max cost)")->capture_default_str();
  app.add_option("--sinkhorn-iters", c.sinkhorn_iters, "Sinkhorn iteration cap")->capture_default_str();
  app.add_option("--outer-iters", c.outer_iters, "Outer iteration cap")->capture_default_str();
  app.add_option("--stop", c.rel_loss_stop, "Relative loss change that stops training")->capture_default_str();
  app.add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app.add_flag("--exact-ot", c.exact_ot, "Solve the plan exactly (network simplex) when small enough");
}

void add_transfer_options(CLI::App& app, TransferArgs& t, bool standalone) {
  if (standalone) {
    app.add_option("--model", t.model, "Trained model file")->required();
    app.add_option("--input", t.input, "Image to transfer (PNG)")->required();
  }
  app.add_option("--out", t.out, "Output image (PNG)")->required();
  app.add_option("--direction", t.direction, "forward or reverse")
      ->check(CLI::IsMember({"forward", "reverse"}))
      ->capture_default_str();
  app.add_option("--stride", t.stride, "Reconstruction stride")->capture_default_str();
  app.add_option("--rho", t.rho, "Gradient regularization weight; 0 disables refinement")->capture_default_str();
}

Image load_input(const std::string& path) {
  try {
    return read_png(path);
  } catch (const Error& e) {
    throw BadInput(e.what());
  }
}

void apply_threads(const std::optional<unsigned>& threads) {
  if (threads) {
    set_max_threads(*threads);
    return;
  }
  if (const char* env = std::getenv("SOT_THREADS")) {
    try {
      set_max_threads(static_cast<unsigned>(std::stoul(env)));
    } catch (const std::exception&) {
      throw BadInput("SOT_THREADS must be a nonnegative integer");
    }
  }
}

void print_record(std::ostream& out, const LossRecord& r) {
  out << "iter=" << r.iteration << " E_sp_x=" << r.e_sp_x << " E_sp_y=" << r.e_sp_y << " E_ot_a=" << r.e_ot_a
      << " E_ot_b=" << r.e_ot_b << " E_c=" << r.e_c << '\n';
}

TransferModel train(const FitArgs& a, std::ostream& out) {
  const Image content = load_input(a.content);
  const Image reference = load_input(a.reference);
  if (content.channels() != reference.channels()) {
    throw BadInput("content and reference differ in channel count");
  }
  try {
    a.config.validate();
  } catch (const Error& e) {
    throw BadInput(e.what());
  }
  FitMonitor monitor;
  monitor.on_iteration = [&](const LossRecord& r) { print_record(out, r); };
  return fit(content, reference, a.config, monitor);
}

// Everything is rendered in memory first so that a failure leaves no files.
void write_fit_outputs(const FitArgs& a, const TransferModel& model) {
  std::optional<Image> atlas_x;
  std::optional<Image> atlas_y;
  if (!a.atlas_dir.empty()) {
    atlas_x = render_atlas(model.dx, model.config.patch_size, model.channels);
    atlas_y = render_atlas(model.dy, model.config.patch_size, model.channels);
  }
  if (!a.out_model.empty()) save_model(model, a.out_model);
  if (!a.loss_csv.empty()) write_loss_csv(model.history, a.loss_csv);
  if (atlas_x) {
    fs::create_directories(a.atlas_dir);
    write_png(*atlas_x, fs::path(a.atlas_dir) / "dict_x.png");
    write_png(*atlas_y, fs::path(a.atlas_dir) / "dict_y.png");
  }
}

TransferResult apply_model(const TransferModel& model, const Image& input, const TransferArgs& t) {
  if (input.channels() != model.channels) {
    throw BadInput("input has " + std::to_string(input.channels()) + " channels but the model expects " +
                   std::to_string(model.channels));
  }
  if (t.stride < 1 || t.stride > model.config.patch_size) {
    throw BadInput("--stride must lie in [1, patch size]");
  }
  if (!(t.rho >= 0.0)) throw BadInput("--rho must be nonnegative");
  if (std::min(input.width(), input.height()) < model.config.patch_size) {
    throw BadInput("input is smaller than the model patch size");
  }
  TransferOptions options;
  options.direction = t.direction == "reverse" ? Direction::reverse : Direction::forward;
  options.stride = t.stride;
  options.rho = t.rho;
  return transfer(model, input, options);
}

void report_transfer(const TransferResult& result, const Image& input, std::ostream& out) {
  if (!result.refine_converged) out << "warning: gradient refinement did not reach its tolerance\n";
  out << "psnr=" << psnr(result.image, input) << '\n';
  // SSIM needs at least an 11x11 window.
  if (std::min(input.width(), input.height()) >= 11) {
    out << "edge_ssim=" << edge_ssim(result.image, input) << '\n';
  }
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::invalid_argument:
    case ErrorCode::parse_error:
    case ErrorCode::unsupported_version:
      return kBadInput;
    default:
      return kFailure;
  }
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> explicit_args;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw BadInput("--config requires a file path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      explicit_args.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw BadInput("cannot read config file: " + path);
    std::string line;
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw BadInput("config line is not key=value: " + line);
      std::string key = line.substr(first, eq - first);
      std::string value = line.substr(eq + 1);
      auto trim = [](std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      trim(key);
      trim(value);
      if (key.rfind("--", 0) == 0) key = key.substr(2);
      from_file.push_back("--" + key + "=" + value);
    }
  }
  if (explicit_args.empty()) return from_file;
  // Keep the subcommand name first.
  std::vector<std::string> merged{explicit_args.front()};
  merged.insert(merged.end(), from_file.begin(), from_file.end());
  merged.insert(merged.end(), explicit_args.begin() + 1, explicit_args.end());
  return merged;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Image color and style transfer by optimal transport between sparse patch dictionaries", "sot"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::optional<unsigned> threads;
  app.add_option("--threads", threads, "Worker threads (default: SOT_THREADS or hardware)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Train dictionaries and the transport plan");
  fit_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_fit_options(*fit_cmd, fit_args, true);
  fit_cmd->add_option("--threads", threads, "Worker threads");
  fit_cmd->add_option("--config", "key=value file with defaults for these flags");

  TransferArgs transfer_args;
  auto* transfer_cmd = app.add_subcommand("transfer", "Apply a trained model to an image");
  transfer_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_transfer_options(*transfer_cmd, transfer_args, true);
  transfer_cmd->add_option("--threads", threads, "Worker threads");
  transfer_cmd->add_option("--config", "key=value file with defaults for these flags");

  std::string eval_a;
  std::string eval_b;
  auto* eval_cmd = app.add_subcommand("eval", "Compare two images (PSNR, SSIM, edge SSIM)");
  eval_cmd->add_option("--a", eval_a, "First image")->required();
  eval_cmd->add_option("--b", eval_b, "Second image")->required();

  FitArgs run_fit;
  TransferArgs run_transfer;
  auto* run_cmd = app.add_subcommand("run", "Fit on content/reference, then transfer the content");
  run_cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_fit_options(*run_cmd, run_fit, false);
  add_transfer_options(*run_cmd, run_transfer, false);
  run_cmd->add_option("--threads", threads, "Worker threads");
  run_cmd->add_option("--config", "key=value file with defaults for these flags");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const CLI::App* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kBadInput;
  } catch (const BadInput& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }

  try {
    apply_threads(threads);
    if (fit_cmd->parsed()) {
      const TransferModel model = train(fit_args, out);
      write_fit_outputs(fit_args, model);
    } else if (transfer_cmd->parsed()) {
      TransferModel model;
      try {
        model = load_model(transfer_args.model);
      } catch (const Error& e) {
        throw BadInput(e.what());
      }
      const Image input = load_input(transfer_args.input);
      const TransferResult result = apply_model(model, input, transfer_args);
      write_png(result.image, transfer_args.out);
      report_transfer(result, input, out);
    } else if (eval_cmd->parsed()) {
      const Image a = load_input(eval_a);
      const Image b = load_input(eval_b);
      if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) {
        throw BadInput("images differ in size or channel count");
      }
      out << "psnr=" << psnr(a, b) << '\n';
      if (std::min(a.width(), a.height()) < 11) throw BadInput("images must be at least 11x11 for SSIM");
      out << "ssim=" << ssim(a, b) << '\n';
      out << "edge_ssim=" << edge_ssim(a, b) << '\n';
    } else if (run_cmd->parsed()) {
      const TransferModel model = train(run_fit, out);
      const Image content = load_input(run_fit.content);
      const TransferResult result = apply_model(model, content, run_transfer);
      write_png(result.image, run_transfer.out);
      write_fit_outputs(run_fit, model);
      report_transfer(result, content, out);
    }
  } catch (const BadInput& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace sot::cli
