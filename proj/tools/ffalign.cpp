// ffalign command line: simulate, scan, fit, tables.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ffalign/ffalign.hpp"

namespace {

ffalign::RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ffalign::ConfigError("cannot read config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = ffalign::parse_config(buf.str());
  for (const auto& d : parsed.defaults_applied) std::clog << "default: " << d << "\n";
  if (parsed.config.pressure_pa) {
    std::clog << "note: experiment.pressure is recorded in outputs but does not enter the model\n";
  }
  return parsed.config;
}

std::vector<double> parse_a2_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : ffalign::config_detail::split_list(text)) {
    const auto v = ffalign::config_detail::parse_number(item);
    if (!v) throw ffalign::ConfigError("--a2: '" + item + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Field-free alignment of linear molecules under elliptically polarized pulses"};
  app.set_version_flag("--version", std::string(ffalign::version));
  app.require_subcommand(1);

  std::string output_dir = ".";
  unsigned threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--output-dir", output_dir, "Directory for CSV outputs");
  app.add_option("--threads", threads, "Worker threads (0: all cores)");
  app.add_option("--seed", seed, "Seed for synthetic noise (tests only)");

  std::string config_path;
  double noise = 0.0;
  auto* sim = app.add_subcommand("simulate", "Thermal simulation, signal and revival peaks");
  sim->add_option("config", config_path, "Run configuration file")->required();
  sim->add_option("--noise", noise, "Add white noise of this fraction of the peak to the signal (tests only)")
      ->check(CLI::NonNegativeNumber);

  std::string a2_text;
  int steps = 24;
  auto* scan = app.add_subcommand("scan", "First-revival signal peak versus ellipticity");
  scan->add_option("config", config_path, "Run configuration file")->required();
  scan->add_option("--a2", a2_text, "Comma separated a2 values (default: 0 to 1/2 in steps of 1/24)");
  scan->add_option("--steps", steps, "Grid steps per unit a2 when --a2 is absent");

  std::string measured_path;
  auto* fit = app.add_subcommand("fit", "Scale-fit the model signal to a measured signal CSV");
  fit->add_option("config", config_path, "Run configuration file")->required();
  fit->add_option("measured", measured_path, "Signal CSV (delay_ps plus Sx and/or Sy)")->required();

  int j_max = 8;
  std::string axis_text = "x,y,z";
  auto* tables = app.add_subcommand("tables", "Dump cos^2 matrix elements");
  tables->add_option("--j-max", j_max, "Largest J")->check(CLI::Range(2, 400));
  tables->add_option("--axis", axis_text, "Axes to dump, e.g. x,z");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ffalign::exit_config;
  }

  ffalign::RunOptions opt;
  opt.threads = threads;
  opt.log = &std::clog;
  try {
    if (*sim) {
      const auto cfg = load_config(config_path);
      const auto out = ffalign::run_simulate(cfg, output_dir, opt, {noise, seed});
      for (const auto& r : out.peaks) {
        std::cout << "revival " << r.index << ": Sy " << r.sy << " at " << r.ty_ps << " ps, Sx/Sy " << r.ratio()
                  << "\n";
      }
      if (out.superposition) {
        const auto& d = out.superposition->deviation;
        std::cout << "superposition relative rms: x " << d.x << ", y " << d.y << ", z " << d.z << "\n";
      }
      for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
    } else if (*scan) {
      const auto cfg = load_config(config_path);
      const auto a2 = a2_text.empty() ? ffalign::ellipticity_grid(steps) : parse_a2_list(a2_text);
      const auto out = ffalign::run_scan(cfg, a2, output_dir, opt);
      for (const auto& r : out.rows) {
        std::cout << "a2 " << r.a2 << ": Sy " << r.sy_norm << ", Sx " << r.sx_norm << "\n";
      }
      for (const auto& f : out.files) std::cout << "wrote " << f.string() << "\n";
    } else if (*fit) {
      const auto cfg = load_config(config_path);
      std::ifstream in(measured_path);
      if (!in) throw ffalign::ConfigError("cannot read measured signal " + measured_path);
      const auto measured = ffalign::read_signal_csv(in);
      const auto out = ffalign::run_fit(cfg, measured, output_dir, opt);
      for (const auto& af : out.fits) {
        std::cout << "S" << ffalign::to_string(af.axis) << ": scale " << af.fit.scale << ", rms residual "
                  << af.fit.rms_residual << "\n";
      }
      if (!out.passed) {
        std::cerr << "fit residual above threshold " << cfg.fit.threshold << "\n";
        return ffalign::exit_fit;
      }
    } else if (*tables) {
      std::vector<ffalign::Axis> axes;
      for (const auto& a : ffalign::config_detail::split_list(axis_text)) {
        if (a == "x") axes.push_back(ffalign::Axis::x);
        else if (a == "y") axes.push_back(ffalign::Axis::y);
        else if (a == "z") axes.push_back(ffalign::Axis::z);
        else throw ffalign::ConfigError("--axis: unknown axis '" + a + "'");
      }
      ffalign::write_tables(std::cout, j_max, axes);
    }
  } catch (const ffalign::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return ffalign::exit_config;
  } catch (const ffalign::PhysicsError& e) {
    std::cerr << "physics error: " << e.what() << "\n";
    return ffalign::exit_physics;
  }
  return ffalign::exit_ok;
}
