#include <thread>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace sheetparts;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct FakeClock {
  std::chrono::system_clock::time_point now = std::chrono::system_clock::time_point(std::chrono::seconds(1'000'000));
};

struct Fixture : ::testing::Test {
  std::shared_ptr<FakeClock> clock = std::make_shared<FakeClock>();
  Service service{catalog(support::kTemplates), std::chrono::seconds(60), [c = clock] { return c->now; }};

  HttpResponse get(const std::string& path) { return service.handle("GET", path, ""); }
  HttpResponse post(const std::string& path, const json& body) { return service.handle("POST", path, body.dump()); }
};

json worked_request(const std::string& format = "tsv") {
  json b = json::object();
  for (const auto& [k, v] : support::worked_bindings()) b[k] = v;
  return {{"bindings", b}, {"format", format}};
}

}  // namespace

TEST_F(Fixture, ListAndDetail) {
  auto r = get("/api/components");
  ASSERT_EQ(r.status, 200);
  json list = json::parse(r.body);
  ASSERT_EQ(list.size(), 3u);
  EXPECT_EQ(list[0]["id"], "demo");
  EXPECT_EQ(list[1]["id"], "filter-remove-non-matches");

  r = get("/api/components/filter-remove-non-matches");
  ASSERT_EQ(r.status, 200);
  json d = json::parse(r.body);
  EXPECT_EQ(d["manifest"]["params"][0]["name"], "pattern");
  EXPECT_EQ(d["docs_url"], "/api/components/filter-remove-non-matches/docs");
  EXPECT_EQ(d["example"]["bindings"]["input"], "Sheet1!A3:A15");

  r = get("/api/components/filter-remove-non-matches/docs");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type.rfind("text/html", 0), 0u);

  EXPECT_EQ(get("/api/components/nope").status, 404);
  EXPECT_EQ(get("/api/components/Bad..Id").status, 400);
  EXPECT_EQ(get("/api/nothing").status, 404);
}

TEST_F(Fixture, InstantiateAndDownload) {
  auto r = post("/api/components/filter-remove-non-matches/instantiate", worked_request());
  ASSERT_EQ(r.status, 200) << r.body;
  json j = json::parse(r.body);
  std::string token = j["token"];
  EXPECT_EQ(token.size(), 32u);
  EXPECT_EQ(j["download_url"], "/api/downloads/" + token);

  auto dl = get("/api/downloads/" + token);
  ASSERT_EQ(dl.status, 200);
  EXPECT_EQ(dl.body, instantiate_to_text(support::load("filter-remove-non-matches"), support::worked_bindings(),
                                         GridFormat::tsv));
  EXPECT_EQ(j["size"], dl.body.size());
  EXPECT_NE(dl.headers.at("Content-Disposition").find("filter-remove-non-matches.tsv"), std::string::npos);

  EXPECT_EQ(get("/api/downloads/00000000000000000000000000000000").status, 404);
  clock->now += std::chrono::seconds(61);
  EXPECT_EQ(get("/api/downloads/" + token).status, 410);
}

TEST_F(Fixture, InstantiateErrors) {
  json req = worked_request();
  req["bindings"].erase("pattern");
  req["bindings"]["output"] = "Sheet1!C3:C10";
  auto r = post("/api/components/filter-remove-non-matches/instantiate", req);
  ASSERT_EQ(r.status, 422);
  json j = json::parse(r.body);
  std::set<std::string> got;
  for (const auto& d : j["details"]) got.insert(d["code"].get<std::string>() + ":" + d["subject"].get<std::string>());
  EXPECT_EQ(got, (std::set<std::string>{"MissingParam:pattern", "LengthMismatch:output"}));

  EXPECT_EQ(service.handle("POST", "/api/components/demo/instantiate", "{oops").status, 400);
  EXPECT_EQ(service.handle("POST", "/api/components/demo/instantiate", "[1]").status, 400);
  EXPECT_EQ(post("/api/components/demo/instantiate", {{"format", "xlsx"}}).status, 400);
  EXPECT_EQ(post("/api/components/demo/instantiate", {{"bindings", {{"x", json::array()}}}}).status, 400);
}

TEST_F(Fixture, ApplyOntoEmptyGridEqualsInstantiation) {
  auto r = post("/api/components/filter-remove-non-matches/apply", worked_request());
  ASSERT_EQ(r.status, 200) << r.body;
  EXPECT_EQ(grid_from_json(json::parse(r.body)),
            instantiate(support::load("filter-remove-non-matches"), support::worked_bindings()));
}

TEST_F(Fixture, ApplyThenEval) {
  FormulaGrid base;
  auto inputs = support::worked_inputs();
  for (std::size_t k = 0; k < inputs.size(); ++k)
    if (inputs[k]) base.set_content(CellAddr{"Sheet1", 1, 3 + static_cast<int>(k)}, CellContent::literal_text(*inputs[k]));
  json req = worked_request();
  req["grid"] = grid_to_json(base);
  auto r = post("/api/components/filter-remove-non-matches/apply", req);
  ASSERT_EQ(r.status, 200) << r.body;

  auto ev = post("/api/eval", {{"grid", json::parse(r.body)}, {"seed", 0}});
  ASSERT_EQ(ev.status, 200) << ev.body;
  std::map<std::string, json> by_ref;
  json values = json::parse(ev.body);
  for (const auto& c : values["sheets"][0]["cells"]) by_ref[c["ref"].get<std::string>()] = c["value"];
  EXPECT_EQ(by_ref["C3"], "X");
  EXPECT_EQ(by_ref["C4"], "X2");
  EXPECT_EQ(by_ref["C5"], "X4");
  EXPECT_EQ(by_ref["C6"], "X5");
  EXPECT_EQ(by_ref["C7"], "");
  EXPECT_EQ(by_ref["B3"], 2);
}

TEST_F(Fixture, ApplyCollisions) {
  FormulaGrid base;
  base.set_content(CellAddr{"Sheet1", 2, 5}, CellContent::literal_number(1));
  base.set_content(CellAddr{"Sheet1", 3, 15}, CellContent::literal_text("x"));
  base.set_content(CellAddr{"Sheet1", 1, 5}, CellContent::literal_text("input cells are fine"));
  json req = worked_request();
  req["grid"] = grid_to_json(base);
  auto r = post("/api/components/filter-remove-non-matches/apply", req);
  ASSERT_EQ(r.status, 409);
  EXPECT_EQ(json::parse(r.body)["details"], json::parse(R"(["Sheet1!B5","Sheet1!C15"])"));
}

TEST_F(Fixture, Eval) {
  auto demo = post("/api/components/demo/instantiate", {{"format", "json"}});
  ASSERT_EQ(demo.status, 200);
  std::string token = json::parse(demo.body)["token"];
  json grid = json::parse(get("/api/downloads/" + token).body);
  auto r = post("/api/eval", {{"grid", grid}});
  ASSERT_EQ(r.status, 200);
  EXPECT_NE(r.body.find("620"), std::string::npos);

  FormulaGrid cyc;
  cyc.set_content(CellAddr{"S", 1, 1}, CellContent::formula("A1+1"));
  r = post("/api/eval", {{"grid", grid_to_json(cyc)}});
  EXPECT_NE(r.body.find("#CYCLE!"), std::string::npos);

  FormulaGrid rnd;
  rnd.set_content(CellAddr{"S", 1, 1}, CellContent::formula("RAND()"));
  json q{{"grid", grid_to_json(rnd)}, {"seed", 9}};
  EXPECT_EQ(post("/api/eval", q).body, post("/api/eval", q).body);

  json o{{"grid", grid_to_json(cyc)}, {"overrides", json::array({{{"cell", "nosheet"}, {"value", 1}}})}};
  EXPECT_EQ(post("/api/eval", o).status, 400);
  EXPECT_EQ(post("/api/eval", {{"grid", 5}}).status, 400);
  EXPECT_EQ(post("/api/eval", {{"overrides", json::array({1})}}).status, 400);
}

TEST(TokenStore, Lifetime) {
  auto now = std::chrono::system_clock::time_point(std::chrono::seconds(100));
  TokenStore store(std::chrono::seconds(10), [&] { return now; });
  auto [a, exp] = store.put("x", "text/plain", "x.txt");
  auto [b, exp2] = store.put("y", "text/plain", "y.txt");
  EXPECT_NE(a, b);
  EXPECT_EQ(exp, now + std::chrono::seconds(10));
  TokenStore::Entry e;
  EXPECT_EQ(store.get(a, e), TokenStore::Lookup::found);
  EXPECT_EQ(e.body, "x");
  now += std::chrono::seconds(10);
  EXPECT_EQ(store.get(a, e), TokenStore::Lookup::expired);
  EXPECT_EQ(store.get("zz", e), TokenStore::Lookup::unknown);
}

TEST(Http, RealServerSmoke) {
  fs::path web = support::scratch("web");
  support::write_file(web / "index.html", "<html>hello</html>");
  Service service(catalog(support::kTemplates));
  httplib::Server server;
  service.mount(server, web.string());
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto list = client.Get("/api/components");
  ASSERT_TRUE(list);
  EXPECT_EQ(list->status, 200);
  auto page = client.Get("/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->body, "<html>hello</html>");

  auto inst = client.Post("/api/components/filter-remove-non-matches/instantiate", worked_request().dump(),
                          "application/json");
  ASSERT_TRUE(inst);
  ASSERT_EQ(inst->status, 200);
  auto dl = client.Get(json::parse(inst->body)["download_url"].get<std::string>());
  ASSERT_TRUE(dl);
  EXPECT_EQ(dl->body, instantiate_to_text(support::load("filter-remove-non-matches"), support::worked_bindings(),
                                          GridFormat::tsv));
  EXPECT_NE(dl->get_header_value("Content-Disposition").find("attachment"), std::string::npos);

  server.stop();
  th.join();
  fs::remove_all(web);
}
