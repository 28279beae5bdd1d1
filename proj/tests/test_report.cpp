#include "tmpdir.hpp"

#include "xgnn/report.hpp"

#include <gtest/gtest.h>

using namespace xgnn;

namespace {

TrainReport fake_report(double test, Index params, bool mae = false) {
  TrainReport r;
  r.config.family = Family::Gcn;
  r.config.variant = Variant::Expander;
  r.config.density = 0.1;
  r.dataset = "toy";
  r.metric = mae ? "mae" : "accuracy";
  r.test_metric = test;
  r.params.total = params;
  r.params.ratio_vs_vanilla = 0.125;
  return r;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Table, TwoRunsTwoRows) {
  const std::string t = render_table({to_json(fake_report(0.8054, 1234)),
                                      to_json(fake_report(0.5, 99))});
  const auto ls = lines(t);
  ASSERT_EQ(ls.size(), 4u);
  EXPECT_NE(ls[0].find("ACC."), std::string::npos);
  EXPECT_NE(ls[0].find("Params."), std::string::npos);
  EXPECT_NE(ls[2].find("80.54"), std::string::npos);
  EXPECT_NE(ls[2].find("1234"), std::string::npos);
  EXPECT_NE(ls[2].find("expander 10%"), std::string::npos);
  // columns line up
  EXPECT_EQ(ls[0].find("Params."), ls[2].find("1234"));
  EXPECT_EQ(ls[2].find("1234"), ls[3].find("99"));
}

TEST(Table, CrossValidationAndRegression) {
  nlohmann::json cv;
  cv["test_mean"] = 0.7;
  cv["test_std"] = 0.1;
  cv["reports"] = {to_json(fake_report(0.6, 10))};
  const std::string t = render_table({cv, to_json(fake_report(0.321, 10, true))});
  EXPECT_NE(t.find("70.00 ± 10.00"), std::string::npos) << t;
  EXPECT_NE(t.find("0.321"), std::string::npos) << t;
  EXPECT_NE(t.find("MAE"), std::string::npos);
}

TEST(Table, MalformedReportThrows) {
  EXPECT_THROW(render_table({nlohmann::json{{"x", 1}}}), DataError);
}

TEST(ReportJson, EchoesConfigAndHyper) {
  TrainReport r = fake_report(0.5, 3);
  r.hyper.epochs = 17;
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j.at("config").at("density"), 0.1);
  EXPECT_EQ(j.at("hyper").at("epochs"), 17);
  EXPECT_EQ(j.at("params").at("total"), 3);
}

TEST(JsonFile, AtomicWriteAndRead) {
  TempDir tmp;
  write_json_atomic(tmp / "sub/a.json", nlohmann::json{{"k", 1}});
  EXPECT_EQ(read_json(tmp / "sub/a.json").at("k"), 1);
  EXPECT_FALSE(std::filesystem::exists(tmp / "sub/a.json.tmp"));
  EXPECT_THROW(read_json(tmp / "missing.json"), DataError);
  spit(tmp / "bad.json", "{");
  EXPECT_THROW(read_json(tmp / "bad.json"), DataError);
}

TEST(Parameters, SaveLoadRoundTrip) {
  TempDir tmp;
  ModelConfig c;
  c.family = Family::Sage;
  c.variant = Variant::Expander;
  c.density = 0.3;
  c.hidden = 8;
  c.output_dim = 3;
  c.seed = 4;
  Model a(c, 5);
  for (Parameter* p : a.parameters())
    p->weight().mutable_value() =
        p->masked() ? Matrix(p->weight().value().array() + p->mask_matrix().array())
                    : Matrix(p->weight().value().array() + 0.5);
  const auto masks = save_parameters(a, tmp.path());
  EXPECT_EQ(masks.size(), 4u);
  c.seed = 99;  // different init and masks
  Model b(c, 5);
  EXPECT_THROW(load_parameters(b, tmp.path()), DataError);  // masks differ
  c.seed = 4;
  Model d(c, 5);
  load_parameters(d, tmp.path());
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    EXPECT_EQ(a.parameters()[i]->weight().value(), d.parameters()[i]->weight().value());
}
