#include "co2grav/cli.hpp"

#include "co2grav/dataset_io.hpp"
#include "co2grav/error.hpp"
#include "co2grav/forward_gravity.hpp"
#include "co2grav/metrics.hpp"
#include "co2grav/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

namespace co2grav::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Dense kernels above this many coefficients are evaluated on the fly.
constexpr std::size_t kDenseLimit = std::size_t{1} << 24;

KernelMode kernel_mode_for(std::size_t stations, std::size_t cells) {
  return stations * cells <= kDenseLimit ? KernelMode::dense_matrix : KernelMode::on_the_fly;
}

std::string sample_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%05zu", n);
  return buf;
}

std::string series_id(std::size_t realization, std::size_t snapshot) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "r%04zu_t%04zu", realization, snapshot);
  return buf;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream os(file, std::ios::trunc);
  if (!os)
    throw FormatError("cannot open " + file.string() + " for writing");
  os << text;
  if (!os)
    throw FormatError("failed writing " + file.string());
}

std::vector<std::size_t> select_samples(const DatasetManifest& m, const SelectOptions& sel) {
  std::vector<std::size_t> out;
  if (!sel.ids.empty()) {
    for (const auto& id : sel.ids)
      out.push_back(m.index_of(id));
    return out;
  }
  if (sel.split == "all") {
    out.resize(m.samples.size());
    for (std::size_t n = 0; n < out.size(); ++n)
      out[n] = n;
    return out;
  }
  if (!m.splits)
    throw ValidationError("dataset has no split assignment; use --split all or --ids");
  if (sel.split == "train")
    return m.splits->train;
  if (sel.split == "val")
    return m.splits->val;
  if (sel.split == "test")
    return m.splits->test;
  throw ValidationError("unknown split '" + sel.split + "'");
}

json invert_config_json(const InvertOptions& o) {
  json ids = o.select.ids;
  return {{"dataset", o.select.dataset.string()},
          {"split", o.select.split},
          {"ids", ids},
          {"init", o.init ? o.init->string() : std::string()},
          {"max_iters", o.max_iters},
          {"tol", o.tol},
          {"constraint", o.unconstrained ? "unconstrained" : "masked"}};
}

void run_inversions(const InvertOptions& opt, const std::string& tool) {
  if (opt.init && fs::equivalent(*opt.init, opt.out))
    throw ValidationError("refine output must differ from the initial prediction directory");
  const auto m = read_dataset_manifest(opt.select.dataset);
  const auto picked = select_samples(m, opt.select);
  if (!(opt.tol > 0.0))
    throw ValidationError("--tol must be positive");
  const ForwardOperator op(m.grid, m.sensors, kernel_mode_for(m.sensors->size(), m.grid->size()),
                           opt.threads);
  fs::create_directories(opt.out);

  json summary = json::array();
  for (const auto n : picked) {
    const auto& entry = m.samples[n];
    const auto rec = read_sample(opt.select.dataset / entry.path, m.grid, m.sensors);
    InversionConfig cfg;
    cfg.max_iters = opt.max_iters;
    cfg.rel_residual_tol = opt.tol;
    cfg.constraint = opt.unconstrained ? Constraint::unconstrained : Constraint::masked;
    const auto result = opt.init
                            ? refine(op, rec.gravity_raw, read_prediction(*opt.init, entry.id, m.grid), cfg)
                            : invert(op, rec.gravity_raw, cfg);
    write_prediction(opt.out, entry.id, result.model);

    std::ostringstream hist;
    hist << "iteration,data_misfit_ugal2\n" << std::setprecision(17);
    for (std::size_t k = 0; k < result.data_misfit_history.size(); ++k)
      hist << k << ',' << result.data_misfit_history[k] << '\n';
    write_text(opt.out / entry.id / "history.csv", hist.str());

    summary.push_back({{"id", entry.id},
                       {"iterations", result.iterations},
                       {"converged", result.converged},
                       {"initial_misfit", result.data_misfit_history.front()},
                       {"final_misfit", result.data_misfit_history.back()}});
  }
  write_json(opt.out / "run.json",
             {{"format_version", kFormatVersion},
              {"reproducibility", reproducibility_block(tool, m.splits ? m.splits->seed : 0,
                                                        invert_config_json(opt))},
              {"samples", summary}});
}

} // namespace

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json reproducibility_block(const std::string& tool, std::uint64_t seed, const json& config) {
  return {{"tool", tool},
          {"seed", seed},
          {"config_hash", config_hash(config)},
          {"format_version", kFormatVersion},
          {"config", config}};
}

void export_kernel(const ForwardOperator& op, const fs::path& dir) {
  fs::create_directories(dir);
  const auto file = dir / "kernel.f64";
  std::vector<std::uint8_t> bytes(op.rows() * op.cols() * 8);
  std::vector<double> row(op.cols());
  for (std::size_t s = 0; s < op.rows(); ++s)
    for (std::size_t c = 0; c < op.cols(); ++c) {
      const auto bits = std::bit_cast<std::uint64_t>(op.coefficient(s, c));
      const std::size_t at = 8 * (s * op.cols() + c);
      for (int b = 0; b < 8; ++b)
        bytes[at + static_cast<std::size_t>(b)] = static_cast<std::uint8_t>(bits >> (8 * b));
    }
  {
    std::ofstream os(file, std::ios::binary | std::ios::trunc);
    if (!os)
      throw FormatError("cannot open " + file.string() + " for writing");
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os)
      throw FormatError("failed writing " + file.string());
  }
  write_json(dir / "kernel.json", {{"format_version", kFormatVersion},
                                   {"file", "kernel.f64"},
                                   {"dtype", "float64-le"},
                                   {"rows", op.rows()},
                                   {"cols", op.cols()},
                                   {"order", "row-major, rows = stations, cols = cells x-fastest"},
                                   {"units", "uGal per kg/m^3"},
                                   {"grid", grid_to_json(op.grid())},
                                   {"sensors", sensors_to_json(op.sensors())},
                                   {"crc32", crc32_hex(crc32_of(bytes))}});
}

void cmd_generate(const GenerateOptions& opt) {
  opt.geostats.validate();
  opt.scenario.validate();
  if (opt.samples == 0)
    throw ValidationError("--samples must be positive");
  if (!is_standard_spacing(opt.spacing))
    throw ValidationError("sensor spacing must be one of 100, 250, 500, 1000, 2000, 3000 m");
  if (opt.series && (opt.snapshots == 0 || !(opt.cadence > 0.0) ||
                     opt.cadence * static_cast<double>(opt.snapshots) > opt.scenario.total_years()))
    throw ValidationError("series snapshots must fit inside the scenario window");

  auto grid = std::make_shared<const ReservoirGrid>(default_desk_grid(opt.grid_n));
  const auto ext = grid->extent();
  auto sensors = std::make_shared<const SensorGrid>(SensorGrid::covering(
      opt.spacing, grid->origin().x, grid->origin().x + ext.x, grid->origin().y,
      grid->origin().y + ext.y));
  const ForwardOperator op(grid, sensors, kernel_mode_for(sensors->size(), grid->size()), 1);

  // One work item per realization; series mode yields several records each.
  const std::size_t items = opt.samples;
  std::vector<std::vector<SampleRecord>> produced(items);
  std::mutex error_mutex;
  std::mt19937_64 time_rng(derive_seed(opt.seed, 7));
  std::vector<double> single_times(items);
  for (std::size_t n = 0; n < items; ++n)
    single_times[n] = sample_time_step(n, items, time_rng, 100, opt.scenario.injection_years,
                                       opt.scenario.total_years());

  parallel_for(items, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin; n < end; ++n) {
      const std::uint64_t seed = derive_seed(opt.seed, 1000 + n);
      const auto geo = realize_geology(grid, opt.geostats, seed);
      auto make = [&](std::string id, double t) {
        const auto sat = simulate_plume(geo.porosity, geo.logperm, opt.scenario, t);
        const auto rho = quantize_f32(density_change(geo.porosity, sat, opt.scenario));
        return make_record(std::move(id), n, t, seed, geo.corr_length, opt.geostats,
                           op.forward(rho), rho, sat);
      };
      if (opt.series) {
        for (std::size_t k = 0; k < opt.snapshots; ++k)
          produced[n].push_back(make(series_id(n, k), opt.cadence * static_cast<double>(k + 1)));
      } else {
        produced[n].push_back(make(sample_id(n), single_times[n]));
      }
    }
  });

  fs::create_directories(opt.out / "samples");
  DatasetManifest m;
  m.grid = grid;
  m.sensors = sensors;
  m.geostats = opt.geostats;
  m.scenario = opt.scenario;
  for (const auto& batch : produced)
    for (const auto& rec : batch) {
      const std::string rel = "samples/" + rec.id;
      write_sample(rec, opt.out / rel);
      m.samples.push_back({rec.id, rel, rec.realization, rec.time_step});
      for (std::size_t c = 0; c < rec.plume_mask.size(); ++c)
        (rec.plume_mask[c] != 0.0 ? m.n_foreground : m.n_background) += 1;
    }
  if (m.n_foreground == 0)
    throw ValidationError("generated dataset has no plume cells; class weights are undefined");
  m.class_weights = class_weights(m.n_background, m.n_foreground);
  if (m.samples.size() >= 20)
    m.splits = make_splits(m.samples.size(), opt.seed);

  json config = {{"samples", opt.samples},
                 {"grid_n", opt.grid_n},
                 {"spacing", opt.spacing},
                 {"series", opt.series},
                 {"snapshots", opt.snapshots},
                 {"cadence", opt.cadence},
                 {"geostats", geostats_to_json(opt.geostats)},
                 {"scenario", scenario_to_json(opt.scenario)}};
  m.reproducibility = reproducibility_block("co2grav generate", opt.seed, config);
  write_dataset_manifest(m, opt.out);
  if (opt.export_kernel)
    export_kernel(op, opt.out / "kernel");
}

void cmd_invert(const InvertOptions& opt) {
  if (opt.init)
    throw ValidationError("invert does not take an initial prediction; use refine");
  run_inversions(opt, "co2grav invert");
}

void cmd_refine(const InvertOptions& opt) {
  if (!opt.init)
    throw ValidationError("refine needs --init with a prediction directory");
  run_inversions(opt, "co2grav refine");
}

json cmd_evaluate(const EvaluateOptions& opt) {
  const auto m = read_dataset_manifest(opt.select.dataset);
  const auto picked = select_samples(m, opt.select);
  if (picked.empty())
    throw ValidationError("no samples selected for evaluation");
  const ForwardOperator op(m.grid, m.sensors, kernel_mode_for(m.sensors->size(), m.grid->size()),
                           opt.threads);
  EvalReport report;
  for (const auto n : picked) {
    const auto& entry = m.samples[n];
    const auto rec = read_sample(opt.select.dataset / entry.path, m.grid, m.sensors);
    const auto pred = read_prediction(opt.predictions, entry.id, m.grid);
    report.samples.push_back(score_sample(entry.id, op, pred, rec.density_change, rec.plume_mask,
                                          rec.gravity_raw,
                                          opt.threshold ? &*opt.threshold : nullptr));
  }
  json config = {{"dataset", opt.select.dataset.string()},
                 {"predictions", opt.predictions.string()},
                 {"split", opt.select.split},
                 {"ids", opt.select.ids},
                 {"threshold", opt.threshold ? json(*opt.threshold) : json(nullptr)}};
  auto j = report.to_json();
  j["format_version"] = kFormatVersion;
  j["reproducibility"] =
      reproducibility_block("co2grav evaluate", m.splits ? m.splits->seed : 0, config);
  if (!opt.report.empty()) {
    if (opt.report.has_parent_path())
      fs::create_directories(opt.report.parent_path());
    write_json(opt.report, j);
  }
  if (opt.csv)
    write_text(*opt.csv, report.to_csv());
  return j;
}

void cmd_forward(const ForwardOptions& opt) {
  const auto m = read_dataset_manifest(opt.dataset);
  ForwardOperator op(m.grid, m.sensors, kernel_mode_for(m.sensors->size(), m.grid->size()),
                     opt.threads);
  if (opt.spacing)
    op = subsample_sensors(op, *opt.spacing);
  if (opt.export_kernel)
    export_kernel(op, opt.out);
  if (!opt.predictions)
    return;

  std::vector<std::string> ids = opt.ids;
  if (ids.empty())
    for (const auto& e : fs::directory_iterator(*opt.predictions))
      if (e.is_directory() && fs::exists(e.path() / "manifest.json"))
        ids.push_back(e.path().filename().string());
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const auto rho = read_prediction(*opt.predictions, id, m.grid);
    const auto g = op.forward(rho);
    const auto dir = opt.out / id;
    fs::create_directories(dir);
    json j = {{"format_version", kFormatVersion},
              {"id", id},
              {"sensors", sensors_to_json(op.sensors())},
              {"fields", {{"gravity_raw", write_map(dir, "gravity_raw", g)}}}};
    write_json(dir / "manifest.json", j);
  }
}

void cmd_split(const fs::path& dataset, std::uint64_t seed) {
  auto m = read_dataset_manifest(dataset);
  m.splits = make_splits(m.samples.size(), seed);
  m.reproducibility["split"] =
      reproducibility_block("co2grav split", seed, {{"samples", m.samples.size()}});
  write_dataset_manifest(m, dataset);
}

void cmd_sequences(const fs::path& dataset, const fs::path& out) {
  const auto m = read_dataset_manifest(dataset);
  std::map<std::size_t, std::vector<const SampleEntry*>> by_realization;
  for (const auto& s : m.samples)
    by_realization[s.realization].push_back(&s);
  json seqs = json::array();
  for (auto& [realization, entries] : by_realization) {
    std::sort(entries.begin(), entries.end(),
              [](const SampleEntry* a, const SampleEntry* b) { return a->time_step < b->time_step; });
    std::vector<double> times;
    for (const auto* e : entries)
      times.push_back(e->time_step);
    for (const auto& seq : build_sequences(times)) {
      json inputs = json::array();
      for (auto idx : seq.records)
        inputs.push_back(entries[idx]->id);
      seqs.push_back({{"realization", realization},
                      {"inputs", inputs},
                      {"time_steps", seq.time_steps},
                      {"target", entries[seq.target()]->id}});
    }
  }
  if (out.has_parent_path())
    fs::create_directories(out.parent_path());
  write_json(out, {{"format_version", kFormatVersion},
                   {"length", kSequenceLength},
                   {"sequences", seqs},
                   {"reproducibility",
                    reproducibility_block("co2grav sequences", 0,
                                          {{"dataset", dataset.string()}})}});
}

int run(int argc, char** argv) {
  CLI::App app{"co2grav: synthetic CO2 plumes, time-lapse gravity, and L2 inversion"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: $CO2GRAV_THREADS or all cores)");

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "Synthesize plume models and their gravity maps");
  g->add_option("--out", gen.out, "Dataset directory")->required();
  g->add_option("-n,--samples", gen.samples, "Samples (or realizations with --series)");
  g->add_option("--grid-n", gen.grid_n, "Cells per axis of the desk grid");
  g->add_option("--spacing", gen.spacing, "Sensor spacing in meters");
  g->add_option("--seed", gen.seed, "Master seed");
  g->add_option("--corr-length-mean", gen.geostats.corr_length_mean, "Correlation length (cells)");
  g->add_option("--porosity-mean", gen.geostats.porosity_mean, "Porosity mean");
  g->add_option("--rho-co2", gen.scenario.rho_co2, "CO2 density (kg/m^3)");
  g->add_option("--rho-brine", gen.scenario.rho_brine, "Brine density (kg/m^3)");
  g->add_option("--s-max", gen.scenario.s_max, "Maximum CO2 saturation per cell");
  g->add_flag("--series", gen.series, "Emit time series per realization");
  g->add_option("--snapshots", gen.snapshots, "Snapshots per realization in series mode");
  g->add_option("--cadence", gen.cadence, "Years between snapshots in series mode");
  g->add_flag("--export-kernel", gen.export_kernel, "Also write kernel/ with the dense operator");

  auto add_select = [](CLI::App* sub, SelectOptions& sel) {
    sub->add_option("--dataset", sel.dataset, "Dataset directory")->required();
    sub->add_option("--split", sel.split, "train | val | test | all");
    sub->add_option("--ids", sel.ids, "Explicit sample ids")->delimiter(',');
  };

  InvertOptions inv;
  auto* i = app.add_subcommand("invert", "Masked (or unconstrained) CGLS inversion");
  add_select(i, inv.select);
  i->add_option("--out", inv.out, "Prediction directory")->required();
  i->add_option("--max-iters", inv.max_iters, "Iteration cap");
  i->add_option("--tol", inv.tol, "Relative residual tolerance");
  i->add_flag("--unconstrained", inv.unconstrained, "Update every cell, not just the mask");

  InvertOptions ref;
  auto* r = app.add_subcommand("refine", "CGLS inversion seeded with a learned prediction");
  add_select(r, ref.select);
  r->add_option("--out", ref.out, "Prediction directory")->required();
  fs::path init;
  r->add_option("--init", init, "Prediction directory used as the starting model")->required();
  r->add_option("--max-iters", ref.max_iters, "Iteration cap");
  r->add_option("--tol", ref.tol, "Relative residual tolerance");
  r->add_flag("--unconstrained", ref.unconstrained, "Update every cell, not just the mask");

  EvaluateOptions ev;
  auto* e = app.add_subcommand("evaluate", "Score predictions against the dataset");
  add_select(e, ev.select);
  e->add_option("--predictions", ev.predictions, "Prediction directory")->required();
  e->add_option("--report", ev.report, "JSON report path")->required();
  fs::path csv;
  e->add_option("--csv", csv, "Per-sample CSV path");
  double threshold = 0.0;
  auto* thr = e->add_option("--threshold", threshold, "Density cutoff (kg/m^3) for the Dice mask");

  ForwardOptions fw;
  auto* f = app.add_subcommand("forward", "Forward gravity of prediction volumes");
  f->add_option("--dataset", fw.dataset, "Dataset directory")->required();
  fs::path preds;
  auto* fpred = f->add_option("--predictions", preds, "Prediction directory");
  f->add_option("--ids", fw.ids, "Prediction ids")->delimiter(',');
  f->add_option("--out", fw.out, "Output directory")->required();
  double fspacing = 0.0;
  auto* fsp = f->add_option("--spacing", fspacing, "Decimate stations to this spacing (m)");
  f->add_flag("--export-kernel", fw.export_kernel, "Write kernel.f64 / kernel.json to --out");

  fs::path split_dataset;
  std::uint64_t split_seed = 1;
  auto* s = app.add_subcommand("split", "Recompute train/val/test and cross-validation folds");
  s->add_option("--dataset", split_dataset, "Dataset directory")->required();
  s->add_option("--seed", split_seed, "Shuffle seed");

  fs::path seq_dataset, seq_out;
  auto* q = app.add_subcommand("sequences", "Build ten-step sequence windows per realization");
  q->add_option("--dataset", seq_dataset, "Dataset directory")->required();
  q->add_option("--out", seq_out, "Output JSON (default: <dataset>/sequences.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    gen.threads = inv.threads = ref.threads = ev.threads = fw.threads = threads;
    if (g->parsed()) {
      cmd_generate(gen);
    } else if (i->parsed()) {
      cmd_invert(inv);
    } else if (r->parsed()) {
      ref.init = init;
      cmd_refine(ref);
    } else if (e->parsed()) {
      if (!csv.empty())
        ev.csv = csv;
      if (thr->count() > 0)
        ev.threshold = threshold;
      const auto j = cmd_evaluate(ev);
      std::cout << j.at("metrics").dump(2) << '\n';
    } else if (f->parsed()) {
      if (fpred->count() > 0)
        fw.predictions = preds;
      if (fsp->count() > 0)
        fw.spacing = fspacing;
      cmd_forward(fw);
    } else if (s->parsed()) {
      cmd_split(split_dataset, split_seed);
    } else if (q->parsed()) {
      cmd_sequences(seq_dataset, seq_out.empty() ? seq_dataset / "sequences.json" : seq_out);
    }
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}

} // namespace co2grav::cli
