#include "photonlab/cli.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "photonlab/analysis.hpp"
#include "photonlab/config.hpp"
#include "photonlab/error.hpp"
#include "photonlab/plots.hpp"
#include "photonlab/random.hpp"
#include "photonlab/reproduce.hpp"
#include "photonlab/svg_plot.hpp"
#include "photonlab/units.hpp"

namespace photonlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply_thread_cap() {
  if (const char* env = std::getenv("PHOTONLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) {
      throw ConfigError(std::string("PHOTONLAB_THREADS must be a positive integer, got '") + env + "'");
    }
    omp_set_num_threads(int(n));
  }
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open input " + p.string());
  return in;
}

template <class F>
void write_output(const fs::path& p, F&& f) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  f(out);
  if (!out) throw IoError("failed writing " + p.string());
}

bool is_ptag(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  char magic[5] = {};
  in.read(magic, 5);
  return in && std::memcmp(magic, "PTAG1", 5) == 0;
}

// --- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string sub;
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void simulate(const SimulateArgs& a, std::ostream& out) {
  ExperimentConfig cfg = a.config.empty() ? paper_default_config() : load_config(a.config);
  cfg.validate();
  if (a.seed) cfg.seed = *a.seed;
  const fs::path dir = a.out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(a.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  const auto& in = cfg.instrument;
  const std::vector<Emitter> emitters(std::size_t(cfg.n_emitters), cfg.emitter);
  std::vector<fs::path> written;

  if (a.sub == "stream") {
    TimeTagStream s;
    if (cfg.excitation.mode == ExcitationMode::CW) {
      s = simulate_cw_stream(emitters, cfg.excitation, cfg.detector, acquisition_ps(cfg), cfg.seed);
    } else {
      s = simulate_pulsed_stream(cfg.emitter, cfg.excitation, cfg.detector, in.lifetime.n_pulses, cfg.seed);
    }
    save_stream(dir / "stream.ptag", s);
    written = {dir / "stream.ptag", dir / "stream.ptag.json"};
  } else if (a.sub == "hbt") {
    ExcitationConfig exc = cfg.excitation;
    exc.mode = ExcitationMode::CW;
    const auto s = simulate_hbt_stream(emitters, exc, cfg.detector, acquisition_ps(cfg), cfg.seed);
    save_stream(dir / "hbt.ptag", s);
    written = {dir / "hbt.ptag", dir / "hbt.ptag.json"};
  } else if (a.sub == "lifetime") {
    ExcitationConfig exc = cfg.excitation;
    exc.mode = ExcitationMode::Pulsed;
    const auto s = simulate_pulsed_stream(cfg.emitter, exc, cfg.detector, in.lifetime.n_pulses, cfg.seed);
    save_stream(dir / "lifetime.ptag", s);
    const auto bins = to_decay_bins(tcspc_histogram(s, exc.pulse_period_ns * units::kPsPerNs,
                                                    exc.pulse_offset_ns * units::kPsPerNs, in.lifetime.bin_ps,
                                                    in.lifetime.pre_window_ps, 0));
    write_output(dir / "decay.csv", [&](std::ostream& o) { write_decay_csv(o, bins, s.origin); });
    written = {dir / "lifetime.ptag", dir / "lifetime.ptag.json", dir / "decay.csv"};
  } else if (a.sub == "michelson") {
    const auto ig = simulate_michelson_scan(cfg.emitter, in.scan, cfg.seed);
    write_output(dir / "michelson.csv", [&](std::ostream& o) { write_interferogram_csv(o, ig); });
    written = {dir / "michelson.csv"};
  } else if (a.sub == "spectrum") {
    const auto& sc = in.spectrum;
    const auto s = simulate_spectrum(cfg.emitter, spectrum_wavelengths(sc), sc.peak_counts, sc.offset_counts,
                                     cfg.seed);
    write_output(dir / "spectrum.csv", [&](std::ostream& o) { write_spectrum_csv(o, s); });
    written = {dir / "spectrum.csv"};
  } else if (a.sub == "polarization") {
    const auto& pc = in.polarization;
    const auto hwp = simulate_hwp_sweep(sweep_angles(pc.step_deg, 180.0), pc.absorption_azimuth_deg,
                                        pc.peak_counts, pc.background_counts, pc.absorption_contrast,
                                        derive_seed(cfg.seed, 0));
    write_output(dir / "hwp.csv", [&](std::ostream& o) {
      write_polarization_csv(o, hwp, PolarizationMode::HwpAbsorption,
                             {{"producer", "simulate_hwp_sweep"}, {"seed", cfg.seed}});
    });
    written.push_back(dir / "hwp.csv");
    for (std::size_t i = 0; i < pc.excitation_polarization_deg.size(); ++i) {
      const double e = pc.excitation_polarization_deg[i];
      const auto s = simulate_polarizer_sweep(sweep_angles(pc.step_deg, 360.0 - pc.step_deg),
                                              pc.emission_azimuth_deg, e, pc.absorption_azimuth_deg,
                                              pc.peak_counts, pc.background_counts, derive_seed(cfg.seed, 1 + i));
      const auto p = dir / fmt::format("polarizer_exc{:g}.csv", e);
      write_output(p, [&](std::ostream& o) {
        write_polarization_csv(o, s, PolarizationMode::PolarizerEmission,
                               {{"producer", "simulate_polarizer_sweep"},
                                {"seed", cfg.seed},
                                {"excitation_polarization_deg", e}});
      });
      written.push_back(p);
    }
  } else if (a.sub == "dipole-image") {
    const auto& ic = in.imaging;
    for (std::size_t i = 0; i < ic.defocus_nm.size(); ++i) {
      auto im = render_defocused_image(cfg.emitter.dipole, ic.optics, ic.defocus_nm[i]);
      if (ic.pixel_noise > 0.0) im = add_pixel_noise(im, ic.pixel_noise, derive_seed(cfg.seed, i));
      const auto p = dir / fmt::format("plane_{:g}nm.f64", ic.defocus_nm[i]);
      save_image(p, im);
      auto pgm = p;
      pgm.replace_extension(".pgm");
      write_pgm(pgm, im);
      written.insert(written.end(), {p, fs::path(p.string() + ".json"), pgm});
    }
  } else {
    throw UsageError("unknown simulate subcommand '" + a.sub + "'");
  }
  for (const auto& p : written) out << p.string() << "\n";
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
  std::string sub;
  std::vector<std::string> inputs;
  std::string plot;
  std::optional<double> signal_fraction;
  std::int64_t bin_ps = 256;
  std::int64_t max_tau_ps = 50000;
  double window_ps = kDefaultLifetimeWindowPs;
  double tcspc_bin_ps = 50.0;
  double pre_window_ps = 2000.0;
  std::optional<double> wavelength_nm;
  double search_step_deg = 2.0;
  bool refine_defocus = false;
};

const fs::path& single_input(const AnalyzeArgs& a) {
  static fs::path p;
  if (a.inputs.size() != 1) throw UsageError("analyze " + a.sub + " takes exactly one -i input");
  p = a.inputs.front();
  return p;
}

void maybe_plot(const AnalyzeArgs& a, const std::string& svg_text) {
  if (!a.plot.empty()) svg::save(a.plot, svg_text);
}

json analyze(const AnalyzeArgs& a) {
  json j;
  if (a.sub == "spectrum") {
    auto in = open_input(single_input(a));
    const auto s = read_spectrum_csv(in);
    const auto fit = fit_lorentzian(s);
    j = to_json(fit);
    const auto [l, dl] = coherence_length_from_fit(fit);
    j["derived"] = {{"coherence_length_um", l}, {"coherence_length_error_um", dl}};
    maybe_plot(a, plots::spectrum(s, fit));
  } else if (a.sub == "envelope") {
    auto in = open_input(single_input(a));
    const auto ig = read_interferogram_csv(in);
    double hint = 794.7;
    if (a.wavelength_nm) {
      hint = *a.wavelength_nm;
    } else if (ig.metadata.contains("emitter")) {
      hint = ig.metadata["emitter"].value("center_wavelength_nm", hint);
    }
    const auto env = extract_envelope(ig, hint);
    const auto fit = fit_coherence_length(env.points);
    j = to_json(fit);
    j["envelope"] = {{"points", env.points.size()},
                     {"dropped_segments", env.dropped_segments},
                     {"carrier_wavelength_nm", env.carrier_wavelength_nm}};
    maybe_plot(a, plots::envelope(env, fit));
  } else if (a.sub == "g2") {
    const auto& p = single_input(a);
    CorrelationHistogram h;
    if (is_ptag(p)) {
      h = compute_g2(load_stream(p), a.bin_ps, a.max_tau_ps);
    } else {
      auto in = open_input(p);
      h = read_g2_csv(in);
    }
    const auto fit = fit_g2_dip(h);
    j = to_json(fit);
    std::optional<double> sf = a.signal_fraction;
    if (!sf) {
      const auto& src = h.provenance.contains("source") ? h.provenance["source"] : json::object();
      if (src.contains("emitters") && !src["emitters"].empty()) {
        sf = src["emitters"][0].value("signal_fraction", 1.0);
      }
    }
    if (sf) {
      const auto n = estimate_emitter_count(fit.value("contrast"), *sf, fit.error("contrast"));
      j["emitter_count"] = {{"signal_fraction", *sf}, {"estimate", n.estimate}, {"rounded", n.rounded}};
    }
    maybe_plot(a, plots::g2(h, fit));
  } else if (a.sub == "lifetime") {
    const auto& p = single_input(a);
    std::vector<DecayBin> bins;
    if (is_ptag(p)) {
      const auto s = load_stream(p);
      if (!s.origin.contains("excitation")) {
        throw FormatError("lifetime: PTAG1 sidecar lacks the excitation block (pulse period and offset)");
      }
      const auto exc = s.origin["excitation"].get<ExcitationConfig>();
      bins = to_decay_bins(tcspc_histogram(s, exc.pulse_period_ns * units::kPsPerNs,
                                           exc.pulse_offset_ns * units::kPsPerNs, a.tcspc_bin_ps,
                                           a.pre_window_ps, 0));
    } else {
      auto in = open_input(p);
      bins = read_decay_csv(in);
    }
    const auto fit = fit_lifetime(bins, a.window_ps);
    j = to_json(fit);
    j["fit_window_start_ps"] = a.window_ps;
    maybe_plot(a, plots::decay(bins, fit, a.window_ps));
  } else if (a.sub == "polarization") {
    auto in = open_input(single_input(a));
    const auto [samples, mode] = read_polarization_csv(in);
    const auto fit = fit_polarization(samples, mode);
    j = to_json(fit);
    j["mode"] = mode == PolarizationMode::HwpAbsorption ? "hwp_absorption" : "polarizer_emission";
    maybe_plot(a, plots::polarization(samples, mode, fit, "Polarization sweep"));
  } else if (a.sub == "orientation") {
    if (a.inputs.empty()) throw UsageError("analyze orientation needs at least one -i image");
    std::vector<DefocusedImage> stack;
    for (const auto& p : a.inputs) stack.push_back(load_image(p));
    OrientationOptions o;
    o.search_step_deg = a.search_step_deg;
    o.refine_defocus = a.refine_defocus;
    const auto est = estimate_orientation(stack, o);
    j = {{"polar_deg", est.orientation.polar_deg},
         {"azimuth_deg", est.orientation.azimuth_deg},
         {"residual", est.residual},
         {"defocus_nm", est.defocus_refined},
         {"scales", est.scales},
         {"backgrounds", est.backgrounds},
         {"azimuth_undetermined", est.azimuth_undetermined},
         {"converged", est.converged},
         {"iterations", est.iterations}};
    maybe_plot(a, plots::image_stack(stack, "Defocused image stack"));
  } else {
    throw UsageError("unknown analyze subcommand '" + a.sub + "'");
  }
  j["analysis"] = a.sub;
  j["inputs"] = a.inputs;
  return j;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"photonlab: single-photon source simulation and analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a data product from a config");
  sim_cmd->add_option("kind", sim.sub, "stream | michelson | hbt | lifetime | polarization | dipole-image | spectrum")
      ->required()
      ->check(CLI::IsMember({"stream", "michelson", "hbt", "lifetime", "polarization", "dipole-image", "spectrum"}));
  sim_cmd->add_option("-c,--config", sim.config, "Experiment config JSON (defaults if omitted)");
  sim_cmd->add_option("-o,--output", sim.out_dir, "Output directory");
  sim_cmd->add_option("--seed", sim.seed, "Override the config seed");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze", "Fit a data product and print the result as JSON");
  an_cmd->add_option("kind", an.sub, "spectrum | envelope | g2 | lifetime | polarization | orientation")
      ->required()
      ->check(CLI::IsMember({"spectrum", "envelope", "g2", "lifetime", "polarization", "orientation"}));
  an_cmd->add_option("-i,--input", an.inputs, "Input file (repeat for an image stack)")->required();
  an_cmd->add_option("--plot", an.plot, "Write an SVG plot of data and fit");
  an_cmd->add_option("--signal-fraction", an.signal_fraction, "g2: signal fraction for the emitter count");
  an_cmd->add_option("--bin-ps", an.bin_ps, "g2 from PTAG1: bin width (ps)");
  an_cmd->add_option("--max-tau-ps", an.max_tau_ps, "g2 from PTAG1: maximum delay (ps)");
  an_cmd->add_option("--window-ps", an.window_ps, "lifetime: fit window start after the pulse (ps)");
  an_cmd->add_option("--tcspc-bin-ps", an.tcspc_bin_ps, "lifetime from PTAG1: histogram bin (ps)");
  an_cmd->add_option("--pre-window-ps", an.pre_window_ps, "lifetime from PTAG1: time kept before each pulse (ps)");
  an_cmd->add_option("--wavelength-nm", an.wavelength_nm, "envelope: carrier wavelength hint (nm)");
  an_cmd->add_option("--search-step-deg", an.search_step_deg, "orientation: grid search step (deg)");
  an_cmd->add_flag("--refine-defocus", an.refine_defocus, "orientation: also refine each plane's defocus");

  ReproduceOptions rep;
  std::string rep_dir = "reproduction";
  auto* rep_cmd = app.add_subcommand("reproduce-paper", "Run the full simulate-analyze chain and compare with the published values");
  rep_cmd->add_option("-o,--output", rep_dir, "Output directory");
  rep_cmd->add_option("--seed", rep.seed, "Seed");
  rep_cmd->add_flag("--quick", rep.quick, "Event counts /100, tolerances x3");

  auto* def_cmd = app.add_subcommand("default-config", "Print the default experiment config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    apply_thread_cap();
    if (*sim_cmd) {
      simulate(sim, out);
    } else if (*an_cmd) {
      out << analyze(an).dump(2) << "\n";
    } else if (*rep_cmd) {
      rep.output_dir = rep_dir;
      const auto report = reproduce_paper(rep, &err);
      out << report.table();
      return report.pass() ? kExitOk : kExitAnalysis;
    } else if (*def_cmd) {
      out << json(paper_default_config()).dump(2) << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  }
}

}  // namespace photonlab
