#pragma once

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sheetparts/emit.hpp"
#include "sheetparts/eval.hpp"
#include "sheetparts/repo.hpp"

namespace sheetparts {

/// Text from the command line or a request: a number if it parses as one,
/// otherwise text. Empty means blank.
inline Value parse_input_value(std::string_view s) {
  if (s.empty()) return Value::blank();
  if (auto n = parse_number(s)) return Value::num(*n);
  return Value::str(std::string(s));
}

inline nlohmann::ordered_json diagnostics_json(const Error& e) {
  nlohmann::ordered_json details = nlohmann::ordered_json::array();
  for (const auto& d : e.diagnostics()) {
    nlohmann::ordered_json j;
    j["stage"] = stage_name(e.stage());
    j["code"] = d.code;
    j["subject"] = d.subject;
    j["message"] = d.message;
    if (d.pos.line > 0) j["line"] = d.pos.line, j["col"] = d.pos.col;
    details.push_back(std::move(j));
  }
  return details;
}

/// Expiring map from opaque download tokens to file bodies.
class TokenStore {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  struct Entry {
    std::string body;
    std::string content_type;
    std::string filename;
    std::chrono::system_clock::time_point expires;
  };

  explicit TokenStore(std::chrono::seconds ttl = std::chrono::seconds(3600), Clock clock = {})
      : ttl_(ttl), clock_(clock ? std::move(clock) : [] { return std::chrono::system_clock::now(); }),
        rng_(std::random_device{}()) {}

  std::pair<std::string, std::chrono::system_clock::time_point> put(std::string body, std::string content_type,
                                                                    std::string filename) {
    std::lock_guard lock(mu_);
    auto now = clock_();
    purge(now);
    std::string token;
    do {
      char buf[33];
      std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng_()),
                    static_cast<unsigned long long>(rng_()));
      token = buf;
    } while (entries_.count(token));
    auto expires = now + ttl_;
    entries_[token] = Entry{std::move(body), std::move(content_type), std::move(filename), expires};
    return {token, expires};
  }

  enum class Lookup { found, expired, unknown };

  /// Expired entries are kept (until the next put) so they can be told
  /// apart from tokens that never existed.
  Lookup get(const std::string& token, Entry& out) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(token);
    if (it == entries_.end()) return Lookup::unknown;
    if (clock_() >= it->second.expires) return Lookup::expired;
    out = it->second;
    return Lookup::found;
  }

  std::chrono::seconds ttl() const { return ttl_; }

 private:
  void purge(std::chrono::system_clock::time_point now) {
    // Keep recently expired entries around for one more TTL to answer 410.
    for (auto it = entries_.begin(); it != entries_.end();)
      it = now >= it->second.expires + ttl_ ? entries_.erase(it) : std::next(it);
  }

  std::chrono::seconds ttl_;
  Clock clock_;
  mutable std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, Entry> entries_;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

/// Request handling independent of the HTTP library, so tests can drive it
/// directly. Templates are read-only after construction.
class Service {
 public:
  explicit Service(Catalog catalog, std::chrono::seconds ttl = std::chrono::seconds(3600),
                   TokenStore::Clock clock = {})
      : catalog_(std::move(catalog)), tokens_(ttl, std::move(clock)) {}

  const Catalog& catalog() const { return catalog_; }

  HttpResponse handle(std::string_view method, std::string_view path, std::string_view body) {
    std::vector<std::string> seg;
    for (std::size_t i = 0; i < path.size();) {
      auto j = path.find('/', i);
      if (j == std::string_view::npos) j = path.size();
      if (j > i) seg.emplace_back(path.substr(i, j - i));
      i = j + 1;
    }
    if (seg.empty() || seg[0] != "api") return error(404, "not found");
    try {
      if (seg.size() == 2 && seg[1] == "components" && method == "GET") return list();
      if (seg.size() == 2 && seg[1] == "eval" && method == "POST") return eval(body);
      if (seg.size() == 3 && seg[1] == "downloads" && method == "GET") return download(seg[2]);
      if (seg.size() >= 3 && seg.size() <= 4 && seg[1] == "components") {
        if (!valid_component_id(seg[2])) return error(400, "invalid component id");
        auto it = catalog_.templates.find(seg[2]);
        if (it == catalog_.templates.end()) return error(404, "unknown component '" + seg[2] + "'");
        const ComponentTemplate& t = it->second;
        if (seg.size() == 3 && method == "GET") return detail(t);
        if (seg.size() == 4 && seg[3] == "docs" && method == "GET")
          return HttpResponse{200, "text/html; charset=utf-8", render_docs(t), {}};
        if (seg.size() == 4 && seg[3] == "instantiate" && method == "POST") return instantiate(t, body);
        if (seg.size() == 4 && seg[3] == "apply" && method == "POST") return apply(t, body);
      }
    } catch (const BadRequest& e) {
      return error(400, e.what());
    } catch (const nlohmann::json::exception& e) {
      return error(400, std::string("malformed request: ") + e.what());
    }
    return error(404, "not found");
  }

  /// Routes everything under /api to handle(); `static_dir` (if non-empty)
  /// is served at "/".
  void mount(httplib::Server& server, const std::string& static_dir = {}) {
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
      HttpResponse r = handle(req.method, req.path, req.body);
      res.status = r.status;
      for (const auto& [k, v] : r.headers) res.set_header(k, v);
      res.set_content(r.body, r.content_type);
    };
    server.Get("/api/.*", forward);
    server.Post("/api/.*", forward);
    if (!static_dir.empty()) server.set_mount_point("/", static_dir);
  }

 private:
  struct BadRequest : std::runtime_error {
    using std::runtime_error::runtime_error;
  };

  static HttpResponse json(int status, const nlohmann::ordered_json& j) {
    return HttpResponse{status, "application/json", j.dump(2) + "\n", {}};
  }

  static HttpResponse error(int status, std::string message,
                            nlohmann::ordered_json details = nlohmann::ordered_json::array()) {
    return json(status, {{"error", std::move(message)}, {"details", std::move(details)}});
  }

  static nlohmann::json parse_body(std::string_view body) {
    try {
      auto j = nlohmann::json::parse(body);
      if (!j.is_object()) throw BadRequest("request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw BadRequest(std::string("invalid JSON body: ") + e.what());
    }
  }

  static Bindings parse_bindings(const nlohmann::json& j) {
    Bindings b;
    if (!j.contains("bindings")) return b;
    if (!j.at("bindings").is_object()) throw BadRequest("'bindings' must be an object");
    for (const auto& [k, v] : j.at("bindings").items()) {
      if (v.is_string()) b[k] = v.get<std::string>();
      else if (v.is_number()) b[k] = v.dump();
      else throw BadRequest("binding '" + k + "' must be a string");
    }
    return b;
  }

  HttpResponse list() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& e : catalog_.entries)
      out.push_back({{"id", e.id}, {"title", e.title}, {"summary", e.summary}});
    return json(200, out);
  }

  HttpResponse detail(const ComponentTemplate& t) const {
    nlohmann::ordered_json j;
    j["id"] = t.id;
    j["title"] = t.title;
    j["summary"] = t.summary;
    j["manifest"] = manifest_to_json(t.manifest);
    j["docs_url"] = "/api/components/" + t.id + "/docs";
    j["example"] = {{"bindings", t.example_bindings}, {"inputs", t.example_inputs}};
    return json(200, j);
  }

  HttpResponse instantiate(const ComponentTemplate& t, std::string_view body) {
    auto req = parse_body(body);
    Bindings b = parse_bindings(req);
    auto format = parse_grid_format(req.value("format", std::string("tsv")));
    if (!format) throw BadRequest("format must be 'tsv' or 'json'");
    std::string bytes;
    try {
      bytes = instantiate_to_text(t, b, *format);
    } catch (const Error& e) {
      return error(422, e.what(), diagnostics_json(e));
    }
    std::size_t size = bytes.size();
    bool tsv = *format == GridFormat::tsv;
    auto [token, expires] = tokens_.put(std::move(bytes), tsv ? "text/tab-separated-values" : "application/json",
                                        t.id + (tsv ? ".tsv" : ".json"));
    nlohmann::ordered_json j;
    j["token"] = token;
    j["expires"] = std::chrono::duration_cast<std::chrono::seconds>(expires.time_since_epoch()).count();
    j["size"] = size;
    j["download_url"] = "/api/downloads/" + token;
    return json(200, j);
  }

  HttpResponse download(const std::string& token) const {
    TokenStore::Entry e;
    switch (tokens_.get(token, e)) {
      case TokenStore::Lookup::unknown: return error(404, "unknown download token");
      case TokenStore::Lookup::expired: return error(410, "download token expired");
      case TokenStore::Lookup::found: break;
    }
    return HttpResponse{200, e.content_type, e.body,
                        {{"Content-Disposition", "attachment; filename=\"" + e.filename + "\""}}};
  }

  static FormulaGrid request_grid(const nlohmann::json& req) {
    if (!req.contains("grid")) return {};
    try {
      return grid_from_json(req.at("grid"));
    } catch (const Error& e) {
      throw BadRequest(e.what());
    }
  }

  HttpResponse apply(const ComponentTemplate& t, std::string_view body) const {
    auto req = parse_body(body);
    Bindings b = parse_bindings(req);
    FormulaGrid base = request_grid(req);
    FormulaGrid produced;
    try {
      produced = sheetparts::instantiate(t, b);
    } catch (const Error& e) {
      return error(422, e.what(), diagnostics_json(e));
    }
    nlohmann::ordered_json collisions = nlohmann::ordered_json::array();
    for (const auto& [a, cell] : produced.cells()) {
      const GridCell* old = base.find(a);
      if (old && (old->content.kind != CellContent::Kind::blank || old->validation))
        collisions.push_back(a.sheet + "!" + render_a1(a));
    }
    if (!collisions.empty()) return error(409, "instantiated cells collide with existing cells", collisions);
    for (const auto& [a, cell] : produced.cells()) base.set(a, cell);
    return json(200, grid_to_json(base));
  }

  static HttpResponse eval(std::string_view body) {
    auto req = parse_body(body);
    FormulaGrid grid = request_grid(req);
    EvalConfig cfg;
    cfg.rng_seed = req.value("seed", std::uint64_t{0});
    for (const auto& o : req.value("overrides", nlohmann::json::array())) {
      auto cell = o.value("cell", std::string{});
      auto addr = parse_a1(cell);
      if (!addr || addr->sheet.empty()) throw BadRequest("bad override cell '" + cell + "'");
      const auto& v = o.contains("value") ? o.at("value") : nlohmann::json();
      Value val = v.is_number()   ? Value::num(v.get<double>())
                  : v.is_string() ? Value::str(v.get<std::string>())
                                  : Value::blank();
      cfg.overrides.emplace_back(*addr, val);
    }
    try {
      return json(200, values_to_json(evaluate(grid, cfg)));
    } catch (const Error& e) {
      return error(422, e.what(), diagnostics_json(e));
    }
  }

  Catalog catalog_;
  TokenStore tokens_;
};

}  // namespace sheetparts
