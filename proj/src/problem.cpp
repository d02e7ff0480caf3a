#include "persuade/problem.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "persuade/errors.hpp"

namespace persuade {

namespace {

using ordered_json = nlohmann::ordered_json;

Rat rat_from_json(const ordered_json& j, const char* field) {
    if (j.is_number_integer())
        return Rat(static_cast<long>(j.get<std::int64_t>()));
    if (j.is_string())
        return parse_rat(j.get<std::string>());
    throw SolverError(Errc::ParseError,
                      std::string(field) + " must be an integer or a \"num/den\" string");
}

ordered_json rat_to_json(const Rat& x) {
    if (x.get_den() == 1 && x.get_num().fits_slong_p())
        return ordered_json(x.get_num().get_si());
    return ordered_json(rat_str(x));
}

Rat max_u_at_state(const Problem& p, int omega) {
    Rat best = p.agent_payoff[0][omega];
    for (std::size_t a = 1; a < p.agent_payoff.size(); ++a)
        best = std::max(best, p.agent_payoff[a][omega]);
    return best;
}

}  // namespace

Problem parse_problem(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw SolverError(Errc::ParseError, e.what());
    }
    if (!j.is_object()) throw SolverError(Errc::ParseError, "top level must be an object");
    for (const char* field : {"actions", "target_action", "agent_payoff",
                              "principal_payoff", "discount", "prior"})
        if (!j.contains(field))
            throw SolverError(Errc::ParseError, std::string("missing field '") + field + "'");

    Problem p;
    if (!j["actions"].is_array() || j["actions"].size() < 2)
        throw SolverError(Errc::ParseError, "'actions' must list at least two actions");
    for (const auto& a : j["actions"]) {
        if (!a.is_string()) throw SolverError(Errc::ParseError, "action ids must be strings");
        p.actions.push_back(a.get<std::string>());
    }

    if (!j["target_action"].is_string())
        throw SolverError(Errc::ParseError, "'target_action' must be a string");
    std::string tgt = j["target_action"].get<std::string>();
    auto it = std::find(p.actions.begin(), p.actions.end(), tgt);
    if (it == p.actions.end())
        throw SolverError(Errc::TargetActionMissing, "'" + tgt + "' not in actions");
    p.target = static_cast<std::size_t>(it - p.actions.begin());

    const auto& up = j["agent_payoff"];
    if (!up.is_object())
        throw SolverError(Errc::ParseError, "'agent_payoff' must map action -> [u0, u1]");
    for (const auto& a : p.actions) {
        if (!up.contains(a))
            throw SolverError(Errc::ParseError, "agent_payoff missing action '" + a + "'");
        const auto& row = up[a];
        if (!row.is_array() || row.size() != 2)
            throw SolverError(Errc::ParseError, "agent_payoff['" + a + "'] must be [u0, u1]");
        p.agent_payoff.push_back({rat_from_json(row[0], "agent_payoff"),
                                  rat_from_json(row[1], "agent_payoff")});
    }
    if (up.size() != p.actions.size())
        throw SolverError(Errc::ParseError, "agent_payoff has entries for unknown actions");

    const auto& vp = j["principal_payoff"];
    if (!vp.is_array() || vp.size() != 2)
        throw SolverError(Errc::ParseError, "'principal_payoff' must be [v0, v1]");
    p.principal_payoff = {rat_from_json(vp[0], "principal_payoff"),
                          rat_from_json(vp[1], "principal_payoff")};

    p.discount = rat_from_json(j["discount"], "discount");
    p.prior = rat_from_json(j["prior"], "prior");
    return p;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SolverError(Errc::IoError, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_problem(buf.str());
}

std::string serialize_problem(const Problem& p) {
    ordered_json j;
    j["actions"] = ordered_json::array();
    for (const auto& a : p.actions) j["actions"].push_back(a);
    j["target_action"] = p.actions[p.target];
    ordered_json up = ordered_json::object();
    for (std::size_t a = 0; a < p.actions.size(); ++a)
        up[p.actions[a]] = ordered_json::array(
            {rat_to_json(p.agent_payoff[a][0]), rat_to_json(p.agent_payoff[a][1])});
    j["agent_payoff"] = up;
    j["principal_payoff"] = ordered_json::array(
        {rat_to_json(p.principal_payoff[0]), rat_to_json(p.principal_payoff[1])});
    j["discount"] = rat_to_json(p.discount);
    j["prior"] = rat_to_json(p.prior);
    return j.dump(2) + "\n";
}

Problem validate(Problem p) {
    if (p.actions.size() < 2)
        throw SolverError(Errc::ParseError, "need at least two actions");
    std::set<std::string> seen;
    for (const auto& a : p.actions)
        if (!seen.insert(a).second)
            throw SolverError(Errc::DuplicateAction, "action '" + a + "' appears twice");
    if (p.target >= p.actions.size())
        throw SolverError(Errc::TargetActionMissing, "target index out of range");
    if (p.agent_payoff.size() != p.actions.size())
        throw SolverError(Errc::ParseError, "agent_payoff size mismatch");
    if (p.principal_payoff[0] <= 0 || p.principal_payoff[1] <= 0)
        throw SolverError(Errc::NonPositivePrincipalPayoff,
                          "v(a*, omega) must be strictly positive in both states");
    if (p.discount <= 0 || p.discount >= 1)
        throw SolverError(Errc::DiscountOutOfRange, "discount must lie in (0,1)");
    if (p.prior <= 0 || p.prior >= 1)
        throw SolverError(Errc::PriorOutOfRange, "prior must lie in (0,1)");
    // a* optimal at both degenerate beliefs forces optimality at every belief.
    p.trivial = (max_u_at_state(p, 0) == p.agent_payoff[p.target][0]) &&
                (max_u_at_state(p, 1) == p.agent_payoff[p.target][1]);
    return p;
}

Problem normalize(Problem p) {
    Rat gap0 = max_u_at_state(p, 0) - p.agent_payoff[p.target][0];
    Rat gap1 = max_u_at_state(p, 1) - p.agent_payoff[p.target][1];
    // Compare gap1/v1 < gap0/v0 without dividing; v > 0.
    if (gap1 * p.principal_payoff[0] < gap0 * p.principal_payoff[1]) {
        for (auto& row : p.agent_payoff) std::swap(row[0], row[1]);
        std::swap(p.principal_payoff[0], p.principal_payoff[1]);
        p.prior = 1 - p.prior;
        p.relabeled = !p.relabeled;
    }
    return p;
}

}  // namespace persuade
