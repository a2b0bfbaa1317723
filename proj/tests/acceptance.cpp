#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "photonlab/analysis.hpp"
#include "photonlab/config.hpp"
#include "photonlab/correlation.hpp"
#include "photonlab/emitter.hpp"
#include "photonlab/photostream.hpp"
#include "photonlab/reproduce.hpp"

using namespace photonlab;
namespace fs = std::filesystem;

// Prints one PASS/FAIL line per acceptance criterion; exit status is nonzero
// if any criterion fails.

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::vector<std::string> detail;

  void require(bool ok, std::string what) {
    detail.push_back((ok ? "  ok   " : "  bad  ") + what);
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const ReportRow* find_row(const ReproductionReport& r, const std::string& q) {
  for (const auto& row : r.rows)
    if (row.quantity == q) return &row;
  return nullptr;
}

void require_row(Outcome& o, const ReproductionReport& r, const std::string& q) {
  const auto* row = find_row(r, q);
  if (!row) {
    o.require(false, q + ": row missing");
    return;
  }
  o.require(row->pass, fmt::format("{}: {:.6g} vs {:.6g} +- {:.3g}{}", q, row->simulated, row->target,
                                   row->tolerance, row->error.empty() ? "" : " (" + row->error + ")"));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return m;
}

Outcome report_line(int n, const std::string& title, Outcome o) {
  std::cout << fmt::format("criterion {}: {} - {}\n", n, o.pass ? "PASS" : "FAIL", title);
  for (const auto& d : o.detail) std::cout << d << "\n";
  std::cout.flush();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path self_dir = fs::canonical(fs::path(argc > 0 ? argv[0] : "acceptance")).parent_path();
  const fs::path work = fs::temp_directory_path() / "photonlab_acceptance";
  fs::remove_all(work);

  const auto t0 = Clock::now();
  ReproduceOptions opt;
  opt.seed = 1;
  opt.output_dir = work / "run_a";
  const auto rep = reproduce_paper(opt);
  const double t_rep = seconds_since(t0);

  bool all = true;

  {
    Outcome o;
    const double l = coherence_length_um(794.7, 1.6);
    o.require(fmt::format("{:.4g}", l) == "62.82", fmt::format("coherence_length_um(794.7, 1.6) = {:.6g}", l));
    require_row(o, rep, "coherence length from spectrum (Eq. 1)");
    all &= report_line(1, "coherence length from the linewidth", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "coherence length from interferometer");
    require_row(o, rep, "coherence time");
    all &= report_line(2, "coherence length from the interferometer scan", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "g2 dip contrast");
    require_row(o, rep, "emitter count");
    const auto t1 = Clock::now();
    const ExperimentConfig cfg = paper_default_config();
    Emitter e = cfg.emitter;
    e.signal_fraction = 1.0;
    for (int n = 1; n <= 3; ++n) {
      const std::vector<Emitter> es(std::size_t(n), e);
      const auto s = simulate_hbt_stream(es, cfg.excitation, cfg.detector, acquisition_ps(cfg),
                                         std::uint64_t(700 + n));
      const auto h = compute_g2(s, std::int64_t(cfg.instrument.correlator.bin_width_ps),
                                std::int64_t(cfg.instrument.correlator.max_tau_ps));
      const auto fit = fit_g2_dip(h);
      const double c = fit.value("contrast"), dc = fit.error("contrast");
      o.require(fit.converged && std::abs(c - 1.0 / n) <= 3.0 * dc,
                fmt::format("N = {} at p = 1: contrast {:.4f} +- {:.4f}, expected {:.4f} ({} events)", n, c, dc,
                            1.0 / n, s.tags.size()));
    }
    const double t_sweep = seconds_since(t1);
    o.require(t_sweep < 180.0, fmt::format("N sweep runtime {:.1f} s", t_sweep));
    all &= report_line(3, "antibunching contrast and 1/N scaling", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "excited-state lifetime");
    all &= report_line(4, "excited-state lifetime", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "HWP absorption phase");
    require_row(o, rep, "emission azimuth (excitation 0 deg)");
    require_row(o, rep, "emission azimuth (excitation 90 deg)");
    require_row(o, rep, "emission azimuth difference");
    all &= report_line(5, "polarization azimuths", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "dipole polar angle");
    require_row(o, rep, "dipole azimuth");
    all &= report_line(6, "dipole orientation from defocused images", o).pass;
  }
  {
    Outcome o;
    require_row(o, rep, "time-bandwidth ratio 2 tau_exc / tau_coh");
    o.require(!rep.notes.empty(), "discrepancy note present in the report");
    o.require(t_rep < 300.0, fmt::format("full reproduction runtime {:.1f} s", t_rep));
    all &= report_line(7, "time-bandwidth ratio", o).pass;
  }
  {
    // The property suites are the doctest binaries built next to this one.
    Outcome o;
    const std::vector<std::pair<std::string, std::string>> suites = {
        {"test_interferometry", "Fourier-pair oracle and interferogram properties"},
        {"test_correlation", "g2 symmetry and baseline normalization"},
        {"test_photostream", "dead time and timestamp invariants"},
        {"test_dipole", "dipole image symmetries"},
        {"test_lsq", "finite-difference Jacobian checks"},
        {"test_calibration", "fit round-trip calibrations"},
    };
    for (const auto& [bin, what] : suites) {
      const fs::path exe = self_dir / bin;
      const fs::path log = work / (bin + ".log");
      int rc = -1;
      if (fs::exists(exe)) {
        const std::string cmd = fmt::format("\"{}\" --no-colors=true > \"{}\" 2>&1", exe.string(), log.string());
        rc = std::system(cmd.c_str());
      }
      std::string failed;
      if (rc != 0 && fs::exists(log)) {
        std::istringstream in(slurp(log));
        std::string current;
        for (std::string line; std::getline(in, line);) {
          if (line.rfind("TEST CASE:", 0) == 0) {
            current = line.substr(line.find_first_not_of(' ', 10));
          } else if (line.find("ERROR:") != std::string::npos && !current.empty()) {
            failed += " | " + current;
            current.clear();
          }
        }
      }
      o.require(rc == 0, fmt::format("{} ({}){}", what, bin, rc == -1 ? " not found" : failed));
    }
    all &= report_line(8, "property suites", o).pass;
  }
  {
    Outcome o;
    ReproduceOptions again = opt;
    again.output_dir = work / "run_b";
    (void)reproduce_paper(again);
    const auto a = tree(opt.output_dir), b = tree(again.output_dir);
    o.require(!a.empty() && a.size() == b.size(), fmt::format("{} files in each run", a.size()));
    for (const auto& [name, bytes] : a) {
      const auto it = b.find(name);
      if (it == b.end() || it->second != bytes) o.require(false, name + " differs");
    }
    if (o.pass) o.require(true, "all files byte-identical");
    all &= report_line(9, "determinism of reproduce-paper", o).pass;
  }

  fs::remove_all(work);
  return all ? 0 : 1;
}
