#include "pmiemb/logging.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace pmiemb {

namespace {

std::atomic<LogLevel> g_level{LogLevel::kInfo};
std::mutex g_mutex;

const char *level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarn: return "warn";
    case LogLevel::kError: return "error";
  }
  return "info";
}

std::string quote_if_needed(const std::string &v) {
  if (!v.empty() && v.find_first_of(" \t\"=\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char ch : v) {
    if (ch == '"' || ch == '\\') out += '\\';
    if (ch == '\n') {
      out += "\\n";
      continue;
    }
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

std::string format_log_line(LogLevel level, const std::string &event,
                            std::initializer_list<LogField> fields) {
  std::string line = "level=";
  line += level_name(level);
  line += " event=" + quote_if_needed(event);
  for (const auto &[k, v] : fields) line += " " + k + "=" + quote_if_needed(v);
  return line;
}

void log_event(LogLevel level, const std::string &event, std::initializer_list<LogField> fields) {
  if (level < g_level.load()) return;
  const std::string line = format_log_line(level, event, fields);
  std::lock_guard lock(g_mutex);
  std::cerr << line << '\n';
}

}  // namespace pmiemb
