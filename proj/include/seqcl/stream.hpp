#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace seqcl {

// Pull-based source of observations. next() returns nullopt when exhausted.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::optional<std::int64_t> next() = 0;
};

// Replays a fixed record.
class RecordedSource final : public SampleSource {
public:
    explicit RecordedSource(std::vector<std::int64_t> values) : values_(std::move(values)) {}

    std::optional<std::int64_t> next() override
    {
        if (pos_ >= values_.size())
            return std::nullopt;
        return values_[pos_++];
    }

    std::size_t consumed() const { return pos_; }

private:
    std::vector<std::int64_t> values_;
    std::size_t pos_ = 0;
};

} // namespace seqcl
