#pragma once

#include <string>

#include "eled/events.hpp"

namespace eled {

/*
 * Two interchangeable on-disk event formats:
 *  - CSV with header "t,x,y,p", t printed with round-trip precision;
 *  - packed binary: magic "EVT1", uint32 record count, then little-endian
 *    records of (float64 t, uint16 x, uint16 y, int8 p), 13 bytes each.
 * Readers dispatch on the magic bytes; both round-trip bit-exactly.
 */
void write_events_binary(const std::string& path, const EventStream& stream);
void write_events_csv(const std::string& path, const EventStream& stream);

// Auto-detecting reader (binary magic first, CSV otherwise). Sensor size is
// not stored in either format; callers supply it.
EventStream read_events(const std::string& path, int64_t height, int64_t width);

}  // namespace eled
