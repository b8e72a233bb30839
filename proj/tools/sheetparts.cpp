// Command-line front end: compile, eval, instantiate, doc, serve.
//
// Exit status: 0 on success, 1 for usage errors, unreadable files and bad
// parameters, 2 for compile and evaluation errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sheetparts/sheetparts.hpp"

namespace fs = std::filesystem;
using namespace sheetparts;

namespace {

constexpr int kUsage = 1;
constexpr int kFailed = 2;

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Usage("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Usage("cannot write '" + path + "'");
  out << bytes;
}

void report(const Error& e, const std::string& file = {}) {
  for (const auto& d : e.diagnostics()) {
    std::cerr << stage_name(e.stage()) << ": ";
    if (!file.empty() && d.pos.line > 0) std::cerr << file << ":";
    std::cerr << d.to_string() << "\n";
  }
}

GridFormat grid_format(const std::string& s) {
  auto f = parse_grid_format(s);
  if (!f) throw Usage("format must be tsv or json");
  return *f;
}

FormulaGrid read_grid(const std::string& path) {
  std::string text = slurp(path);
  auto first = text.find_first_not_of(" \t\r\n");
  bool json = (first != std::string::npos && text[first] == '{') || fs::path(path).extension() == ".json";
  return json ? parse_json(text) : parse_tsv(text);
}

Bindings read_bindings(const std::string& params_file, const std::vector<std::string>& params) {
  Bindings b;
  if (!params_file.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(slurp(params_file));
    } catch (const nlohmann::json::exception& e) {
      throw Usage("params file: " + std::string(e.what()));
    }
    if (j.contains("bindings")) j = j.at("bindings");
    if (!j.is_object()) throw Usage("params file must hold a JSON object");
    for (const auto& [k, v] : j.items()) b[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  for (const auto& p : params) {
    auto eq = p.find('=');
    if (eq == std::string::npos) throw Usage("--param expects name=value, got '" + p + "'");
    b[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return b;
}

int run_compile(const std::string& src, const std::string& out, const std::string& format) {
  GridFormat f = grid_format(format);
  std::string text = slurp(src);
  try {
    write_out(out, emit_grid(compile_program(parse_program(text)).grid, f));
  } catch (const Error& e) {
    report(e, src);
    return kFailed;
  }
  return 0;
}

int run_eval(const std::string& gridfile, std::uint64_t seed, const std::vector<std::string>& sets,
             const std::string& out_format, const std::string& out) {
  if (out_format != "csv" && out_format != "json") throw Usage("--out must be csv or json");
  EvalConfig cfg;
  cfg.rng_seed = seed;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    auto addr = eq == std::string::npos ? std::nullopt : parse_a1(s.substr(0, eq));
    if (!addr || addr->sheet.empty()) throw Usage("--set expects Sheet!Cell=value, got '" + s + "'");
    cfg.overrides.emplace_back(*addr, parse_input_value(s.substr(eq + 1)));
  }
  try {
    FormulaGrid grid = read_grid(gridfile);
    ValueGrid values = evaluate(grid, cfg);
    write_out(out, out_format == "csv" ? emit_values_csv(values) : emit_values_json(values));
  } catch (const Error& e) {
    report(e, gridfile);
    return e.stage() == Stage::format ? kUsage : kFailed;
  }
  return 0;
}

int run_instantiate(const std::string& dir, const Bindings& bindings, const std::string& format,
                    const std::string& out) {
  GridFormat f = grid_format(format);
  ComponentTemplate t;
  try {
    t = load_template(dir);
  } catch (const Error& e) {
    report(e);
    return kUsage;
  }
  try {
    write_out(out, instantiate_to_text(t, bindings, f));
  } catch (const Error& e) {
    report(e);
    return e.stage() == Stage::validate ? kUsage : kFailed;
  }
  return 0;
}

int run_doc(const std::string& src, const std::string& out, std::string title) {
  std::string text = slurp(src);
  if (title.empty()) title = fs::path(src).stem().string();
  try {
    write_out(out, render_docs(text, title));
  } catch (const Error& e) {
    report(e, src);
    return kFailed;
  }
  return 0;
}

int run_serve(int port, const std::string& dir, long ttl, const std::string& static_dir) {
  if (!fs::is_directory(dir)) throw Usage("templates directory '" + dir + "' not found");
  if (!static_dir.empty() && !fs::is_directory(static_dir))
    throw Usage("static directory '" + static_dir + "' not found");
  Catalog cat = catalog(dir);
  for (const auto& issue : cat.issues)
    std::cerr << "warning: skipping bundle " << issue.bundle << ": " << issue.message << "\n";
  Service service(std::move(cat), std::chrono::seconds(ttl));
  httplib::Server server;
  service.mount(server, static_dir);
  std::cerr << "listening on port " << port << "\n";
  if (!server.listen("0.0.0.0", port)) {
    std::cerr << "error: cannot listen on port " << port << "\n";
    return kUsage;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile table-equation programs into spreadsheet formula grids"};
  app.require_subcommand(1);

  std::string src, out, format = "tsv";
  auto* compile_cmd = app.add_subcommand("compile", "Compile a program to a formula grid");
  compile_cmd->add_option("src", src, "Program source file")->required();
  compile_cmd->add_option("-o,--output", out, "Output file (default stdout)");
  compile_cmd->add_option("--format", format, "tsv or json");

  std::string gridfile, out_format = "csv";
  std::uint64_t seed = 0;
  std::vector<std::string> sets;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a formula grid (TSV or JSON)");
  eval_cmd->add_option("grid", gridfile, "Grid file")->required();
  eval_cmd->add_option("--seed", seed, "RAND() seed");
  eval_cmd->add_option("--set", sets, "Override a cell: Sheet!A1=value (repeatable)");
  eval_cmd->add_option("--out", out_format, "csv or json");
  eval_cmd->add_option("-o,--output", out, "Output file (default stdout)");

  std::string dir, params_file;
  std::vector<std::string> params;
  auto* inst_cmd = app.add_subcommand("instantiate", "Instantiate a component template");
  inst_cmd->add_option("template", dir, "Template bundle directory")->required();
  inst_cmd->add_option("--param", params, "name=value (repeatable)");
  inst_cmd->add_option("--params-file", params_file, "JSON object of parameter values");
  inst_cmd->add_option("--format", format, "tsv or json");
  inst_cmd->add_option("-o,--output", out, "Output file (default stdout)");

  std::string title;
  auto* doc_cmd = app.add_subcommand("doc", "Render a program as a literate HTML page");
  doc_cmd->add_option("src", src, "Program source file")->required();
  doc_cmd->add_option("-o,--output", out, "Output file (default stdout)");
  doc_cmd->add_option("--title", title, "Page title");

  int port = 8080;
  long ttl = 3600;
  std::string templates_dir = "templates", static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--port", port, "Port (default 8080)");
  serve_cmd->add_option("--templates", templates_dir, "Template repository directory");
  serve_cmd->add_option("--token-ttl", ttl, "Download token lifetime in seconds");
  serve_cmd->add_option("--static", static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*compile_cmd) return run_compile(src, out, format);
    if (*eval_cmd) return run_eval(gridfile, seed, sets, out_format, out);
    if (*inst_cmd) return run_instantiate(dir, read_bindings(params_file, params), format, out);
    if (*doc_cmd) return run_doc(src, out, title);
    if (*serve_cmd) return run_serve(port, templates_dir, ttl, static_dir);
  } catch (const Usage& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
