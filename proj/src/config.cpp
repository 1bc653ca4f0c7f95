#include "vlqkd/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vlqkd/errors.hpp"

namespace vlqkd {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!j.is_object())
        fail(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            fail(path + "." + item.key(), "unknown key");
}

template <typename T>
T get_as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        fail(path, "wrong type");
    }
}

template <typename T>
void read_if(const json& j, const char* key, const std::string& path, T& out) {
    if (auto it = j.find(key); it != j.end())
        out = get_as<T>(*it, path + "." + key);
}

SecurityBudget parse_split(const json& j, const std::string& path,
                           double eps_secure, bool fixed_accounting) {
    if (j.is_string()) {
        auto name = j.get<std::string>();
        if (name == "fixed")
            return {eps_secure / 2, eps_secure / 2, eps_secure / 2};
        if (name == "variable")
            return {eps_secure / 4, eps_secure / 4, eps_secure / 2};
        fail(path, "unknown split preset '" + name +
                       "' (use \"fixed\", \"variable\", or an object)");
    }
    check_keys(j, path, {"eps_at", "eps_pa", "eps_ev"});
    SecurityBudget b;
    if (!j.contains("eps_at") || !j.contains("eps_pa") || !j.contains("eps_ev"))
        fail(path, "custom split needs eps_at, eps_pa and eps_ev");
    b.eps_at = get_as<double>(j["eps_at"], path + ".eps_at");
    b.eps_pa = get_as<double>(j["eps_pa"], path + ".eps_pa");
    b.eps_ev = get_as<double>(j["eps_ev"], path + ".eps_ev");
    double total = fixed_accounting ? std::max(b.eps_at, b.eps_pa) + b.eps_ev
                                    : b.eps_at + b.eps_pa + b.eps_ev;
    if (std::abs(total - eps_secure) > 1e-9 * eps_secure)
        fail(path, "split does not add up to eps_secure under its accounting rule");
    return b;
}

json split_json(const SecurityBudget& b) {
    return json{{"eps_at", b.eps_at}, {"eps_pa", b.eps_pa}, {"eps_ev", b.eps_ev}};
}

OptOptions parse_opts(const json& j, const std::string& path,
                      OptOptions defaults) {
    check_keys(j, path, {"tol_bits", "max_iters", "ipm_gap"});
    OptOptions o = defaults;
    read_if(j, "tol_bits", path, o.tol_bits);
    read_if(j, "max_iters", path, o.max_iters);
    read_if(j, "ipm_gap", path, o.ipm_gap);
    return o;
}

json opts_json(const OptOptions& o) {
    return json{{"tol_bits", o.tol_bits},
                {"max_iters", o.max_iters},
                {"ipm_gap", o.ipm_gap}};
}

void validate_opts(const OptOptions& o, const char* which) {
    if (!(o.tol_bits > 0) || o.max_iters < 1 || !(o.ipm_gap > 0))
        throw config_error(std::string(which) +
                           " optimizer options out of range");
}

} // namespace

void HashingConfig::validate() const {
    if (in_len < 1 || out_len < 1)
        throw config_error("hashing: in_len and out_len must be >= 1");
    if (zero_len_short == zero_len_long)
        throw config_error("hashing: counterexample lengths must differ");
    if (uniformity_out < 1 || uniformity_out > 16)
        throw config_error("hashing: uniformity_out must lie in 1..16");
    if (draws < 1)
        throw config_error("hashing: draws must be >= 1");
}

ProtocolParams ExperimentConfig::protocol() const {
    ProtocolParams pp;
    pp.n_total = n_total;
    pp.m_test = std::llround(m_fraction * double(n_total));
    pp.p_z = p_z;
    pp.f_ec = f_ec;
    pp.d_z = d_z;
    pp.base = base;
    return pp;
}

void ExperimentConfig::validate() const {
    if (!(m_fraction > 0.0 && m_fraction < 1.0))
        throw config_error("protocol.m_fraction must lie in (0,1)");
    protocol().validate();
    if (!(eps_secure > 0.0 && eps_secure < 1.0))
        throw config_error("security.eps_secure must lie in (0,1)");
    fixed_budget.validate();
    variable_budget.validate();
    if (std::abs(fixed_budget.eps_secure_fixed() - eps_secure) >
        1e-9 * eps_secure)
        throw config_error("security.fixed_split inconsistent with eps_secure");
    if (std::abs(variable_budget.eps_secure_variable() - eps_secure) >
        1e-9 * eps_secure)
        throw config_error("security.variable_split inconsistent with eps_secure");

    if (t_grid.empty())
        throw config_error("ladder.t_grid must not be empty");
    double prev = 0.0;
    for (double t : t_grid) {
        if (!(t >= prev))
            throw config_error("ladder.t_grid must be nonnegative and sorted");
        prev = t;
    }

    if (!(honest.depol >= 0.0 && honest.depol <= 1.0))
        throw config_error("channel.depol must lie in [0,1]");
    if (!std::isfinite(honest.misalign_deg))
        throw config_error("channel.misalign_deg must be finite");
    ensemble.validate();

    if (trials < 1 || trials_full < 1)
        throw config_error("trials must be >= 1");
    if (runs_per_channel < 1)
        throw config_error("trials.runs_per_channel must be >= 1");
    validate_opts(ladder_opts, "ladder");
    validate_opts(sample_opts, "sample");
    hashing.validate();
    if (out_dir.empty())
        throw config_error("output_dir must not be empty");
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    for (int i = 0; i <= 12; ++i)
        cfg.t_grid.push_back(0.005 * i);
    cfg.ensemble = ChannelEnsemble::bb84_grid();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    check_keys(j, "config",
               {"protocol", "security", "ladder", "channel", "ensemble",
                "trials", "seed", "optimizer", "hashing", "output_dir"});
    ExperimentConfig cfg = defaults();

    if (j.contains("protocol")) {
        const auto& p = j["protocol"];
        check_keys(p, "protocol",
                   {"n_total", "m_fraction", "p_z", "f_ec", "d_z",
                    "correction_base"});
        read_if(p, "n_total", "protocol", cfg.n_total);
        read_if(p, "m_fraction", "protocol", cfg.m_fraction);
        read_if(p, "p_z", "protocol", cfg.p_z);
        read_if(p, "f_ec", "protocol", cfg.f_ec);
        read_if(p, "d_z", "protocol", cfg.d_z);
        if (p.contains("correction_base")) {
            auto s = get_as<std::string>(p["correction_base"],
                                         "protocol.correction_base");
            if (s == "2dz+1")
                cfg.base = CorrectionBase::TwoDzPlusOne;
            else if (s == "dz+1")
                cfg.base = CorrectionBase::DzPlusOne;
            else
                fail("protocol.correction_base", "must be \"2dz+1\" or \"dz+1\"");
        }
    }

    if (j.contains("security")) {
        const auto& s = j["security"];
        check_keys(s, "security", {"eps_secure", "fixed_split", "variable_split"});
        read_if(s, "eps_secure", "security", cfg.eps_secure);
        cfg.fixed_budget = {cfg.eps_secure / 2, cfg.eps_secure / 2,
                            cfg.eps_secure / 2};
        cfg.variable_budget = {cfg.eps_secure / 4, cfg.eps_secure / 4,
                               cfg.eps_secure / 2};
        if (s.contains("fixed_split"))
            cfg.fixed_budget = parse_split(s["fixed_split"],
                                           "security.fixed_split",
                                           cfg.eps_secure, true);
        if (s.contains("variable_split"))
            cfg.variable_budget = parse_split(s["variable_split"],
                                              "security.variable_split",
                                              cfg.eps_secure, false);
    }

    if (j.contains("ladder")) {
        check_keys(j["ladder"], "ladder", {"t_grid"});
        read_if(j["ladder"], "t_grid", "ladder", cfg.t_grid);
    }

    if (j.contains("channel")) {
        const auto& c = j["channel"];
        check_keys(c, "channel", {"depol", "misalign_deg"});
        read_if(c, "depol", "channel", cfg.honest.depol);
        read_if(c, "misalign_deg", "channel", cfg.honest.misalign_deg);
    }

    if (j.contains("ensemble")) {
        const auto& e = j["ensemble"];
        if (e.is_string()) {
            if (e.get<std::string>() != "grid")
                fail("ensemble", "unknown preset (use \"grid\" or explicit members)");
            cfg.ensemble = ChannelEnsemble::bb84_grid();
        } else {
            check_keys(e, "ensemble", {"members"});
            if (!e.contains("members"))
                fail("ensemble", "needs a members array");
            cfg.ensemble.members.clear();
            std::size_t k = 0;
            for (const auto& m : e["members"]) {
                std::string path = "ensemble.members[" + std::to_string(k++) + "]";
                check_keys(m, path, {"depol", "misalign_deg", "weight"});
                WeightedChannel wc;
                if (!m.contains("depol") || !m.contains("misalign_deg") ||
                    !m.contains("weight"))
                    fail(path, "needs depol, misalign_deg and weight");
                wc.channel.depol = get_as<double>(m["depol"], path + ".depol");
                wc.channel.misalign_deg =
                    get_as<double>(m["misalign_deg"], path + ".misalign_deg");
                wc.weight = get_as<double>(m["weight"], path + ".weight");
                cfg.ensemble.members.push_back(wc);
            }
        }
    }

    if (j.contains("trials")) {
        const auto& t = j["trials"];
        check_keys(t, "trials", {"default", "full", "runs_per_channel"});
        read_if(t, "default", "trials", cfg.trials);
        read_if(t, "full", "trials", cfg.trials_full);
        read_if(t, "runs_per_channel", "trials", cfg.runs_per_channel);
    }

    read_if(j, "seed", "config", cfg.seed);

    if (j.contains("optimizer")) {
        const auto& o = j["optimizer"];
        check_keys(o, "optimizer", {"ladder", "sample"});
        if (o.contains("ladder"))
            cfg.ladder_opts =
                parse_opts(o["ladder"], "optimizer.ladder", cfg.ladder_opts);
        if (o.contains("sample"))
            cfg.sample_opts =
                parse_opts(o["sample"], "optimizer.sample", cfg.sample_opts);
    }

    if (j.contains("hashing")) {
        const auto& h = j["hashing"];
        check_keys(h, "hashing",
                   {"in_len", "out_len", "zero_len_short", "zero_len_long",
                    "uniformity_len", "uniformity_out", "draws"});
        read_if(h, "in_len", "hashing", cfg.hashing.in_len);
        read_if(h, "out_len", "hashing", cfg.hashing.out_len);
        read_if(h, "zero_len_short", "hashing", cfg.hashing.zero_len_short);
        read_if(h, "zero_len_long", "hashing", cfg.hashing.zero_len_long);
        read_if(h, "uniformity_len", "hashing", cfg.hashing.uniformity_len);
        read_if(h, "uniformity_out", "hashing", cfg.hashing.uniformity_out);
        read_if(h, "draws", "hashing", cfg.hashing.draws);
    }

    read_if(j, "output_dir", "config", cfg.out_dir);
    return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
    json members = json::array();
    for (const auto& m : ensemble.members)
        members.push_back(json{{"depol", m.channel.depol},
                               {"misalign_deg", m.channel.misalign_deg},
                               {"weight", m.weight}});
    return json{
        {"protocol",
         {{"n_total", n_total},
          {"m_fraction", m_fraction},
          {"p_z", p_z},
          {"f_ec", f_ec},
          {"d_z", d_z},
          {"correction_base",
           base == CorrectionBase::TwoDzPlusOne ? "2dz+1" : "dz+1"}}},
        {"security",
         {{"eps_secure", eps_secure},
          {"fixed_split", split_json(fixed_budget)},
          {"variable_split", split_json(variable_budget)}}},
        {"ladder", {{"t_grid", t_grid}}},
        {"channel",
         {{"depol", honest.depol}, {"misalign_deg", honest.misalign_deg}}},
        {"ensemble", {{"members", members}}},
        {"trials",
         {{"default", trials},
          {"full", trials_full},
          {"runs_per_channel", runs_per_channel}}},
        {"seed", seed},
        {"optimizer",
         {{"ladder", opts_json(ladder_opts)}, {"sample", opts_json(sample_opts)}}},
        {"hashing",
         {{"in_len", hashing.in_len},
          {"out_len", hashing.out_len},
          {"zero_len_short", hashing.zero_len_short},
          {"zero_len_long", hashing.zero_len_long},
          {"uniformity_len", hashing.uniformity_len},
          {"uniformity_out", hashing.uniformity_out},
          {"draws", hashing.draws}}},
        {"output_dir", out_dir}};
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg = ExperimentConfig::from_json(j);
    cfg.validate();
    return cfg;
}

} // namespace vlqkd
