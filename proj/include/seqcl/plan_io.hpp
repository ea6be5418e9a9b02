#pragma once

#include "seqcl/plans.hpp"
#include "seqcl/tuning.hpp"
#include "seqcl/two_prop.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace seqcl {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "1.0.0";

struct TuneRecord {
    double zeta = 0.0;
    int iterations = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<TuneStep> trace;
    std::vector<std::string> warnings;
};

template <class Report>
TuneRecord tune_record(const TuneResult<Report>& r)
{
    return {r.zeta, r.iterations, r.lo, r.hi, r.trace, r.warnings};
}

struct Provenance {
    std::string tool = "seqcl";
    std::string version{kToolVersion};
    std::optional<TuneRecord> tuning;
};

// A persisted plan: thresholds (or two-prop regions) are stored explicitly.
struct PlanDocument {
    std::variant<MultiHypPlan, TwoPropPlan> plan;
    Provenance provenance;

    bool two_prop() const { return std::holds_alternative<TwoPropPlan>(plan); }
    std::string kind() const;
};

// JSON text, two-space indent, trailing newline. Numbers use the shortest
// round-trip decimal form; infinite thresholds are the strings "inf" / "-inf".
std::string write_plan_document(const PlanDocument& doc);
// Throws InputError naming the line (syntax) or field path (content).
PlanDocument read_plan_document(std::string_view text);

PlanDocument load_plan_document(const std::string& path);
void save_plan_document(const PlanDocument& doc, const std::string& path);

// Certificates with their rectangle traces as JSON, and the traces as CSV:
// hypothesis,x_lo,x_hi,y_lo,y_hi,eta,lower,upper
std::string write_certificates(const std::vector<RiskCertificate>& certs);
void write_certificate_csv(std::ostream& os, const std::vector<RiskCertificate>& certs);

} // namespace seqcl
