#pragma once

// Mirrors broadcast traffic to an external MQTT broker (3.1.1, QoS 0).
// Publishing is best effort: failures are counted and never reach the
// simulation.

#include <cstdint>
#include <string>
#include <vector>

#include "mmosim/config.hpp"
#include "mmosim/messaging.hpp"
#include "mmosim/outbound_pool.hpp"

namespace mmosim {

/// CONNECT packet with a clean session and the given client id.
std::vector<std::uint8_t> mqtt_connect_packet(const std::string& client_id, std::uint16_t keepalive_s = 60);
/// QoS 0 PUBLISH packet.
std::vector<std::uint8_t> mqtt_publish_packet(const std::string& topic, const std::string& payload);
/// "sim/<run_id>/broadcast"
std::string bridge_topic(const std::string& run_id);

MessageBus::Bridge make_mqtt_bridge(const BridgeConfig& cfg, const std::string& run_id,
                                    OutboundPool& pool);

}  // namespace mmosim
