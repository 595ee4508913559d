#include "epinet/commands.hpp"
#include "epinet/scenario.hpp"

#include <gtest/gtest.h>

using namespace epinet;

namespace {

nlohmann::json two_node_json()
{
    return nlohmann::json::parse(R"({
        "graph": {"weights": [[0, 1], [1, 0]]},
        "params": {"beta": 1.0, "gamma": 0.5, "cap_c": 2.0},
        "x0": [0.1, 0.1],
        "run": {"method": "rk4", "dt": 0.01, "t_end": 20, "record_every": 0.5},
        "seed": 3
    })");
}

std::string invalid_field(const nlohmann::json& j)
{
    try {
        resolve(scenario_from_json(j));
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidScenario);
        return e.what();
    }
    return "";
}

} // namespace

TEST(Scenario, ResolvesExplicitGraph)
{
    const auto rs = resolve(scenario_from_json(two_node_json()));
    EXPECT_EQ(rs.network.size(), 2u);
    EXPECT_EQ(rs.params.cap(0), 0.5);
    EXPECT_EQ(rs.x0, (std::vector<double>{0.1, 0.1}));
    EXPECT_EQ(rs.run.t_end, 20.0);
    EXPECT_EQ(rs.seed, 3u);
    EXPECT_EQ(rs.hash.size(), 16u);
}

TEST(Scenario, BandedCapsAndInfectedSeed)
{
    auto j = nlohmann::json::parse(R"({
        "graph": {"generator": "geometric", "n": 10, "side": 100, "radius": 60, "self_weight": 0.3, "cross_weight": 0.02},
        "params": {"beta": 0.8, "gamma": [0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.3]},
        "caps": [{"range": [1, 4], "cap": 0.5}, {"range": [5, 10], "cap": 0.2}],
        "x0": {"infected_nodes": [1, 2, 7], "level": 0.1},
        "seed": 11
    })");
    const auto rs = resolve(scenario_from_json(j));
    EXPECT_EQ(rs.params.cap_c()[0], 2.0);
    EXPECT_EQ(rs.params.cap_c()[9], 5.0);
    EXPECT_EQ(rs.x0, (std::vector<double>{0.1, 0.1, 0, 0, 0, 0, 0.1, 0, 0, 0}));
}

TEST(Scenario, RoundTripIsIdentical)
{
    for (int id = 1; id <= 5; ++id) {
        const Scenario s = experiment_scenario(id, 7);
        const auto text = scenario_to_json(s).dump();
        const Scenario back = scenario_from_json(nlohmann::json::parse(text));
        const auto a = resolve(s);
        const auto b = resolve(back);
        EXPECT_EQ(a.network, b.network) << "experiment " << id;
        EXPECT_EQ(a.params, b.params);
        EXPECT_EQ(a.x0, b.x0);
        EXPECT_EQ(a.hash, b.hash);
        EXPECT_EQ(scenario_to_json(back).dump(), text);
    }
    const auto explicit_graph = scenario_from_json(two_node_json());
    EXPECT_EQ(resolve(scenario_from_json(scenario_to_json(explicit_graph))).network,
              resolve(explicit_graph).network);
}

TEST(Scenario, DiagnosticsNameTheField)
{
    auto j = two_node_json();
    j["x0"] = {0.7, 0.1};
    EXPECT_NE(invalid_field(j).find("'x0'"), std::string::npos);

    j = two_node_json();
    j["params"]["beta"] = -1.0;
    EXPECT_NE(invalid_field(j).find("'params'"), std::string::npos);

    j = two_node_json();
    j["params"].erase("gamma");
    EXPECT_NE(invalid_field(j).find("'params.gamma'"), std::string::npos);

    j = two_node_json();
    j["caps"] = 0.5;
    EXPECT_NE(invalid_field(j).find("'caps'"), std::string::npos);

    j = two_node_json();
    j["graph"] = {{"generator", "hexagonal"}};
    EXPECT_NE(invalid_field(j).find("'graph'"), std::string::npos);

    j = two_node_json();
    j["run"]["dt"] = 100.0;
    EXPECT_NE(invalid_field(j).find("'run'"), std::string::npos);

    j = two_node_json();
    j["x0"] = {{"infected_nodes", {3}}, {"level", 0.1}};
    EXPECT_NE(invalid_field(j).find("'x0'"), std::string::npos);

    j = two_node_json();
    j["params"].erase("cap_c");
    j["caps"] = {{{"range", {1, 1}}, {"cap", 0.5}}};
    EXPECT_NE(invalid_field(j).find("no cap band"), std::string::npos);
}

TEST(Experiments, SharedPositionsAndParameters)
{
    const auto e2 = resolve(experiment_scenario(2, 5));
    const auto e4 = resolve(experiment_scenario(4, 5));
    ASSERT_TRUE(e2.network.positions() && e4.network.positions());
    EXPECT_EQ(*e2.network.positions(), *e4.network.positions());
    EXPECT_EQ(e2.params, e4.params);
    const auto e3 = resolve(experiment_scenario(3, 5));
    EXPECT_NEAR(e3.params.cap(0), 0.9, 1e-15);
    EXPECT_LT(e3.params.cap_c()[0], 2.0);
    EXPECT_EQ(e3.params.cap(99), 0.2);
    EXPECT_EQ(e2.x0[9], 0.1);
    EXPECT_EQ(e2.x0[10], 0.0);
    EXPECT_THROW(experiment_scenario(6, 1), Error);
}

TEST(Sweep, GammaAndRadiusMonotone)
{
    Scenario base = experiment_scenario(2, 3);
    base.run.t_end = 5.0;
    base.run.record_every = 1.0;
    const auto g = sweep(base, SweepParam::Gamma, {0.1, 0.3, 0.5, 0.7});
    ASSERT_EQ(g.size(), 4u);
    for (std::size_t k = 1; k < g.size(); ++k) {
        EXPECT_LT(g[k].spectral_abscissa, g[k - 1].spectral_abscissa);
    }
    const auto r = sweep(base, SweepParam::Radius, {25.0, 50.0}, 2);
    EXPECT_GE(r[1].spectral_abscissa, r[0].spectral_abscissa);
    EXPECT_TRUE(sweep(base, SweepParam::Beta, {}).empty());
    EXPECT_EQ(sweep_csv({}), "value,spectral_abscissa,regime,endemic_max,endemic_mean,controlled_peak\n");

    Scenario explicit_graph = scenario_from_json(two_node_json());
    EXPECT_THROW(sweep(explicit_graph, SweepParam::Radius, {1.0}), Error);
    const auto caps = sweep(explicit_graph, SweepParam::Cap, {0.5, 0.25});
    EXPECT_NEAR(caps[0].endemic_max, 0.19098300562505255, 1e-11);
    EXPECT_LT(caps[1].endemic_max, caps[0].endemic_max);
}
