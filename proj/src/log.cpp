#include "hydroens/log.hpp"

#include <iostream>
#include <mutex>

namespace hydroens::log {
namespace {

std::mutex g_mutex;

void default_sink(Level level, const std::string& message) {
    if (level == Level::debug) return;
    std::cerr << (level == Level::warning ? "warning: " : "") << message << '\n';
}

Sink& current() {
    static Sink sink = default_sink;
    return sink;
}

}  // namespace

Sink set_sink(Sink sink) {
    std::lock_guard lock(g_mutex);
    Sink previous = std::move(current());
    current() = sink ? std::move(sink) : Sink(default_sink);
    return previous;
}

void write(Level level, const std::string& message) {
    Sink sink;
    {
        std::lock_guard lock(g_mutex);
        sink = current();
    }
    sink(level, message);
}

WarningCounter::WarningCounter() {
    previous_ = set_sink([this](Level level, const std::string& message) {
        if (level == Level::warning) {
            ++count_;
            last_ = message;
        }
    });
}

WarningCounter::~WarningCounter() { set_sink(std::move(previous_)); }

}  // namespace hydroens::log
