#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <thread>

#include <minichain/transaction.hpp>

namespace minichain {

/// Integer time units. Simulated clocks count steps; the real-time clock counts Unix seconds.
class ClockSource {
public:
    virtual ~ClockSource() = default;

    virtual Timestamp now() const = 0;
    /// Real time blocks until now() >= t. Simulated time records the deadline and returns.
    virtual void sleep_until(Timestamp t) = 0;
    /// Simulated clocks only.
    virtual void step() = 0;
    virtual bool simulated() const = 0;
};

class SimulatedClock final : public ClockSource {
public:
    explicit SimulatedClock(Timestamp start = 0) : counter_(start) {}

    Timestamp now() const override { return counter_; }

    void sleep_until(Timestamp t) override
    {
        if (t > counter_) wake_deadline_ = t;
    }

    void step() override
    {
        ++counter_;
        if (wake_deadline_ && *wake_deadline_ <= counter_) wake_deadline_.reset();
    }

    bool simulated() const override { return true; }

    /// Pending deadline recorded by sleep_until, cleared once reached.
    std::optional<Timestamp> wake_deadline() const { return wake_deadline_; }

private:
    Timestamp counter_;
    std::optional<Timestamp> wake_deadline_;
};

class RealTimeClock final : public ClockSource {
public:
    Timestamp now() const override
    {
        auto since = std::chrono::system_clock::now().time_since_epoch();
        return static_cast<Timestamp>(std::chrono::duration_cast<std::chrono::seconds>(since).count());
    }

    // Sleeps the whole-unit difference from the current reading, so sleep_until(now() + 1) lasts ~1 s.
    void sleep_until(Timestamp t) override
    {
        Timestamp current = now();
        if (t > current) std::this_thread::sleep_for(std::chrono::seconds(t - current));
    }

    void step() override { throw std::logic_error("step() is not available on a real-time clock"); }

    bool simulated() const override { return false; }
};

} // namespace minichain
