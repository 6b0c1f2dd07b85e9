#pragma once

#include <functional>
#include <string>

namespace hydroens::log {

enum class Level { debug, info, warning };

using Sink = std::function<void(Level, const std::string&)>;

/// Replaces the process-wide sink and returns the previous one. The default sink
/// writes warnings and info lines to stderr.
Sink set_sink(Sink sink);

void write(Level level, const std::string& message);

inline void warn(const std::string& message) { write(Level::warning, message); }
inline void info(const std::string& message) { write(Level::info, message); }

/// Counts warnings emitted while alive; restores the previous sink on destruction.
class WarningCounter {
public:
    WarningCounter();
    ~WarningCounter();
    WarningCounter(const WarningCounter&) = delete;
    WarningCounter& operator=(const WarningCounter&) = delete;

    int count() const noexcept { return count_; }
    const std::string& last() const noexcept { return last_; }

private:
    Sink previous_;
    int count_ = 0;
    std::string last_;
};

}  // namespace hydroens::log
