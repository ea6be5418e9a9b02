#include "seqcl/cli.hpp"

#include "seqcl/errors.hpp"
#include "seqcl/numeric.hpp"
#include "seqcl/oc.hpp"
#include "seqcl/plan_io.hpp"
#include "seqcl/plans.hpp"
#include "seqcl/sim.hpp"
#include "seqcl/sprt.hpp"
#include "seqcl/tuning.hpp"
#include "seqcl/two_prop.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace seqcl {

void apply_thread_env()
{
    const char* v = std::getenv("SEQCL_NUM_THREADS");
    if (v == nullptr || *v == '\0')
        return;
    const int n = std::atoi(v);
    if (n < 1)
        throw InputError("SEQCL_NUM_THREADS must be a positive integer");
    omp_set_num_threads(n);
}

namespace {

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(parse_double(item));
    if (out.empty())
        throw InputError("empty list '" + text + "'");
    return out;
}

std::vector<std::int64_t> parse_sizes(const std::string& text)
{
    std::vector<std::int64_t> out;
    for (double v : parse_list(text)) {
        if (v != std::floor(v) || v < 1)
            throw InputError("stage size " + format_double(v) + " is not a positive integer");
        out.push_back(static_cast<std::int64_t>(v));
    }
    return out;
}

// "a:b,c:d" -> ({a, c}, {b, d})
std::pair<std::vector<double>, std::vector<double>> parse_zones(const std::string& text)
{
    std::pair<std::vector<double>, std::vector<double>> z;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw InputError("zone '" + item + "' is not lo:hi");
        z.first.push_back(parse_double(item.substr(0, colon)));
        z.second.push_back(parse_double(item.substr(colon + 1)));
    }
    if (z.first.empty())
        throw InputError("no zones given");
    return z;
}

// Writes to the named file, or to out when the name is empty or "-".
void emit(const std::string& path, std::ostream& out, const std::string& text)
{
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw InputError("cannot write '" + path + "'");
    f << text;
}

struct DesignArgs {
    std::string kind = "one-sided";
    std::string model = "bernoulli";
    std::string limits = "exact";
    double weight = 1.0;
    std::optional<double> theta0;
    std::optional<double> theta1;
    double alpha = 0.05;
    double beta = 0.05;
    std::string zones;
    std::string risks;
    double zeta = 0.5;
    std::string tie;
    int stages = 5;
    std::string schedule = "geometric";
    std::string sizes;
    std::int64_t n_limit = 0;
    double link_scale = 1.0;
    std::int64_t link_offset = 0;
    std::string out;
};

PlanDocument run_design(const DesignArgs& a)
{
    const ScheduleKind sk = schedule_kind_from_name(a.schedule);
    if (sk == ScheduleKind::fixed && a.sizes.empty())
        throw InputError("--schedule fixed needs --sizes");
    const std::vector<std::int64_t> sizes = a.sizes.empty() ? std::vector<std::int64_t>{} : parse_sizes(a.sizes);
    const int stages = sk == ScheduleKind::fixed ? static_cast<int>(sizes.size()) : a.stages;

    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> risks;
    if (a.zones.empty()) {
        if (!a.theta0 || !a.theta1)
            throw InputError("give --theta0 and --theta1, or --zones and --risks");
        lower = {*a.theta0};
        upper = {*a.theta1};
        risks = {a.alpha, a.beta};
    } else {
        std::tie(lower, upper) = parse_zones(a.zones);
        if (a.risks.empty())
            throw InputError("--zones needs --risks");
        risks = parse_list(a.risks);
    }

    PlanDocument doc;
    if (a.kind == "two-prop") {
        TwoPropDesign d;
        d.zone_lower = lower;
        d.zone_upper = upper;
        d.risks = risks;
        d.zeta = a.zeta;
        d.link = {a.link_scale, a.link_offset};
        d.schedule = sk;
        d.stages = stages;
        d.sizes_x = sizes;
        if (a.n_limit > 0)
            d.n_limit = a.n_limit;
        doc.plan = sk == ScheduleKind::fixed ? two_prop_plan_from_sizes(d, sizes) : build_two_prop_plan(d);
        return doc;
    }
    PlanKind kind = PlanKind::multi;
    if (a.kind == "one-sided") {
        kind = PlanKind::one_sided;
        if (risks.size() != 2)
            throw InputError("a one-sided plan has two hypotheses");
    } else if (a.kind != "multi") {
        throw InputError("unknown plan kind '" + a.kind + "'");
    }
    HypothesisDesign d;
    d.model = model_from_name(a.model);
    d.family = limit_family_from_name(a.limits, a.weight);
    d.zone_lower = lower;
    d.zone_upper = upper;
    d.risks = risks;
    d.zeta = a.zeta;
    d.tie = a.tie.empty() ? (kind == PlanKind::one_sided ? TiePolicy::likelihood_ratio : TiePolicy::midpoint)
                          : tie_policy_from_name(a.tie);
    ScheduleSpec spec;
    spec.kind = sk;
    spec.stages = stages;
    spec.sizes = sizes;
    if (a.n_limit > 0)
        spec.n_limit = a.n_limit;
    doc.plan = build_plan(d, kind, spec);
    return doc;
}

const MultiHypPlan& single_param_plan(const PlanDocument& doc, const char* command)
{
    if (doc.two_prop())
        throw InputError(std::string(command) + " needs a one-sided or multi plan");
    return std::get<MultiHypPlan>(doc.plan);
}

SprtSpec sprt_from_plan(const MultiHypPlan& p, std::int64_t cap)
{
    if (p.hypotheses() != 2)
        throw InputError("the SPRT baseline needs a two-hypothesis plan");
    SprtSpec s;
    s.model = p.design.model;
    s.theta0 = p.design.zone_lower[0];
    s.theta1 = p.design.zone_upper[0];
    s.alpha = p.design.risks[0];
    s.beta = p.design.risks[1];
    s.cap = cap;
    return s;
}

std::uint64_t parse_seed(const std::string& text)
{
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || text.empty() || text[0] == '-')
        throw InputError("--seed '" + text + "' is not a non-negative integer");
    return v;
}

} // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multistage tests of parameters built from confidence limits", "seqcl"};
    app.require_subcommand(1);

    DesignArgs da;
    auto* design = app.add_subcommand("design", "build a plan and write its document");
    design->add_option("--kind", da.kind, "one-sided, multi or two-prop")->capture_default_str();
    design->add_option("--model", da.model, "bernoulli or poisson")->capture_default_str();
    design->add_option("--theta0", da.theta0, "lower hypothesis value (one-sided)");
    design->add_option("--theta1", da.theta1, "upper hypothesis value (one-sided)");
    design->add_option("--alpha", da.alpha, "risk under H_0 (one-sided)")->capture_default_str();
    design->add_option("--beta", da.beta, "risk under H_1 (one-sided)")->capture_default_str();
    design->add_option("--zones", da.zones, "indifference zones lo:hi,lo:hi,...");
    design->add_option("--risks", da.risks, "risk per hypothesis d0,d1,...");
    design->add_option("--limits", da.limits, "exact, chernoff or approx")->capture_default_str();
    design->add_option("--weight", da.weight, "variance weight w of approx limits")->capture_default_str();
    design->add_option("--zeta", da.zeta, "risk tuning parameter")->capture_default_str();
    design->add_option("--tie", da.tie, "likelihood-ratio, midpoint, zone-midpoint, accept-lower, accept-upper");
    design->add_option("--stages", da.stages, "number of stages")->capture_default_str();
    design->add_option("--schedule", da.schedule, "fixed, arithmetic, geometric or fully-sequential")
        ->capture_default_str();
    design->add_option("--sizes", da.sizes, "stage sizes for a fixed schedule n1,n2,...");
    design->add_option("--n-limit", da.n_limit, "search limit for stage sizes");
    design->add_option("--link-scale", da.link_scale, "two-prop: N_y = ceil(scale N_x) + offset")
        ->capture_default_str();
    design->add_option("--link-offset", da.link_offset, "two-prop link offset")->capture_default_str();
    design->add_option("--out", da.out, "output file (default stdout)");

    std::string plan_path;
    std::string out_path;
    std::string grid_text;
    double eps = kDefaultTruncation;
    auto* oc = app.add_subcommand("oc", "exact operating characteristics as CSV");
    oc->add_option("--plan", plan_path, "plan document")->required();
    oc->add_option("--grid", grid_text, "lo:hi:step or a comma list")->required();
    oc->add_option("--eps", eps, "per-stage truncation of unbounded increments")->capture_default_str();
    oc->add_option("--out", out_path, "output file (default stdout)");

    double tol = 1e-3;
    auto* tune = app.add_subcommand("tune", "largest feasible zeta by bisection");
    tune->add_option("--plan", plan_path, "plan document")->required();
    tune->add_option("--tol", tol, "relative bracket width")->capture_default_str();
    tune->add_option("--out", out_path, "output file (default stdout)");

    CertifyOptions copt;
    std::vector<int> hyps;
    std::string csv_path;
    auto* certify = app.add_subcommand("certify", "branch-and-bound risk certificate of a two-prop plan");
    certify->add_option("--plan", plan_path, "plan document")->required();
    certify->add_option("--hypothesis", hyps, "hypothesis index (default all)");
    certify->add_option("--eta", copt.eta, "truncation level")->capture_default_str();
    certify->add_option("--tol", copt.tol, "smallest rectangle side")->capture_default_str();
    certify->add_option("--budget", copt.budget, "maximum rectangles")->capture_default_str();
    certify->add_option("--out", out_path, "certificate JSON (default stdout)");
    certify->add_option("--csv", csv_path, "per-rectangle bounds CSV");
    tune->add_option("--eta", copt.eta, "two-prop truncation level")->capture_default_str();

    std::string seed_text;
    std::int64_t trials = 10000;
    std::int64_t cap = 0;
    bool use_sprt = false;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo OC and ASN");
    simulate_cmd->add_option("--plan", plan_path, "plan document")->required();
    simulate_cmd->add_flag("--sprt", use_sprt, "run the SPRT with the plan's hypotheses and risks");
    simulate_cmd->add_option("--cap", cap, "SPRT sample cap (0 = none)")->capture_default_str();
    simulate_cmd->add_option("--grid", grid_text, "theta values, lo:hi:step or a comma list")->required();
    simulate_cmd->add_option("--trials", trials, "trials per theta")->capture_default_str();
    simulate_cmd->add_option("--seed", seed_text, "random seed")->required();
    simulate_cmd->add_option("--out", out_path, "output file (default stdout)");

    auto* compare_cmd = app.add_subcommand("compare", "plan against the SPRT with common random numbers");
    compare_cmd->add_option("--plan", plan_path, "plan document")->required();
    compare_cmd->add_option("--cap", cap, "SPRT sample cap (0 = none)")->capture_default_str();
    compare_cmd->add_option("--grid", grid_text, "theta values, lo:hi:step or a comma list")->required();
    compare_cmd->add_option("--trials", trials, "trials per theta")->capture_default_str();
    compare_cmd->add_option("--seed", seed_text, "random seed")->required();
    compare_cmd->add_option("--out", out_path, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        apply_thread_env();
        if (*design) {
            const PlanDocument doc = run_design(da);
            emit(da.out, out, write_plan_document(doc));
            return kExitOk;
        }
        const PlanDocument doc = load_plan_document(plan_path);
        if (*oc) {
            const auto& plan = single_param_plan(doc, "oc");
            std::ostringstream os;
            write_oc_csv(os, oc_curve(plan, parse_grid(grid_text), eps));
            emit(out_path, out, os.str());
            return kExitOk;
        }
        if (*tune) {
            PlanDocument next = doc;
            if (doc.two_prop()) {
                const auto& p = std::get<TwoPropPlan>(doc.plan);
                CertifyOptions o = copt;
                o.keep_trace = false;
                const auto res = tune_two_prop(p.design, {}, tol, o);
                TwoPropDesign d = p.design;
                d.zeta = res.zeta;
                std::vector<std::int64_t> sizes;
                for (const auto& st : p.stages)
                    sizes.push_back(st.nx);
                next.plan = d.schedule == ScheduleKind::fixed ? two_prop_plan_from_sizes(d, sizes)
                                                              : build_two_prop_plan(d);
                next.provenance.tuning = tune_record(res);
                for (const auto& w : res.warnings)
                    err << "warning: " << w << '\n';
            } else {
                const auto& p = std::get<MultiHypPlan>(doc.plan);
                const auto res = tune_zeta(p.design, p.kind, p.schedule, {}, tol);
                const auto tuned = plan_at_zeta(p.design, p.kind, p.schedule, res.zeta);
                if (!tuned)
                    throw InfeasibleError("no closed plan at the tuned zeta");
                next.plan = *tuned;
                next.provenance.tuning = tune_record(res);
                for (const auto& w : res.warnings)
                    err << "warning: " << w << '\n';
            }
            emit(out_path, out, write_plan_document(next));
            return kExitOk;
        }
        if (*certify) {
            if (!doc.two_prop())
                throw InputError("certify needs a two-prop plan");
            const auto& p = std::get<TwoPropPlan>(doc.plan);
            if (hyps.empty())
                for (int i = 0; i < p.hypotheses(); ++i)
                    hyps.push_back(i);
            std::vector<RiskCertificate> certs;
            bool all = true;
            for (int i : hyps) {
                if (i < 0 || i >= p.hypotheses())
                    throw InputError("hypothesis index " + std::to_string(i) + " out of range");
                certs.push_back(certify_risk(p, i, p.design.risks[static_cast<std::size_t>(i)], copt));
                all = all && certs.back().verdict == Verdict::proved;
                err << "H_" << i << ": " << verdict_name(certs.back().verdict) << " (max upper "
                    << format_double(certs.back().max_upper) << ", " << certs.back().explored << " rectangles)\n";
            }
            emit(out_path, out, write_certificates(certs));
            if (!csv_path.empty()) {
                std::ostringstream os;
                write_certificate_csv(os, certs);
                emit(csv_path, out, os.str());
            }
            return all ? kExitOk : kExitFail;
        }
        if (*simulate_cmd || *compare_cmd) {
            const auto& plan = single_param_plan(doc, *simulate_cmd ? "simulate" : "compare");
            const std::uint64_t seed = parse_seed(seed_text);
            const auto grid = parse_grid(grid_text);
            std::vector<SimRunner> runners;
            if (*compare_cmd || !use_sprt)
                runners.push_back(plan_runner(plan, "plan"));
            if (*compare_cmd || use_sprt)
                runners.push_back(sprt_runner(sprt_from_plan(plan, cap), "sprt"));
            std::ostringstream os;
            write_sim_csv(os, compare(runners, grid, trials, seed));
            emit(out_path, out, os.str());
            return kExitOk;
        }
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitFail;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace seqcl
