// Machine-parseable `key=value` log lines on stderr.

#ifndef PMIEMB_LOGGING_H_
#define PMIEMB_LOGGING_H_

#include <initializer_list>
#include <string>
#include <utility>

namespace pmiemb {

enum class LogLevel { kDebug, kInfo, kWarn, kError };

void set_log_level(LogLevel level);
LogLevel log_level();

using LogField = std::pair<std::string, std::string>;

// Emits `level=<l> event=<event> k1=v1 ...`. Values containing spaces,
// quotes or '=' are double-quoted with backslash escapes. Thread-safe.
void log_event(LogLevel level, const std::string &event,
               std::initializer_list<LogField> fields = {});

// Renders one line without writing it (used by log_event and tests).
std::string format_log_line(LogLevel level, const std::string &event,
                            std::initializer_list<LogField> fields);

}  // namespace pmiemb

#endif  // PMIEMB_LOGGING_H_
