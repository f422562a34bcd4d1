#pragma once

// Currency sinks and item flow: the NPC shop (spend recycled to the reserve),
// the taxed black market listing board, and untaxed, fraud-prone informal
// trading between players.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmosim/domain.hpp"
#include "mmosim/ledger.hpp"
#include "mmosim/rng.hpp"

namespace mmosim {

enum class ItemCategory { Gear, Consumable, Loot };
std::string_view to_string(ItemCategory c);
ItemCategory parse_item_category(std::string_view s);

struct Item {
  ItemId item_id;
  std::string name;
  ItemCategory category = ItemCategory::Gear;
  Currency npc_price = 1;
  bool tradable = true;

  bool operator==(const Item&) const = default;
};

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<Item> items);

  /// One JSON record per line, fields as in Item (category lower-case).
  static Catalog from_lines(const std::string& text);
  static Catalog from_json(const nlohmann::json& array);
  nlohmann::json to_json() const;

  const Item& at(const ItemId& id) const;
  const Item* find(const ItemId& id) const;
  const std::vector<Item>& items() const { return items_; }
  void set_price(const ItemId& id, Currency price);

  Currency cheapest_price() const;
  Currency cheapest_gear_price() const;
  std::vector<ItemId> ids_in(ItemCategory c) const;

 private:
  std::vector<Item> items_;
};

enum class ListingStatus { Open, Filled, Cancelled };
std::string_view to_string(ListingStatus s);

struct Listing {
  ListingId listing_id = 0;
  Uid seller = 0;
  ItemId item;
  Currency ask_price = 0;
  std::int64_t created_step = 0;
  ListingStatus status = ListingStatus::Open;
  std::optional<Uid> buyer;
};

using Inventory = std::map<ItemId, int>;

/// Tax on a black-market sale: price * rate rounded half-up, computed in
/// integer parts-per-million so decimal rates round exactly.
Currency round_half_up_tax(Currency price, double tax_rate);

enum class SellChannel { BlackMarket, Informal };

/// Probability that a seller picks informal trading when both channels are
/// open: habit * decay^days, scaled by aversion^frauds for players who have
/// been defrauded before.
double informal_probability(double habit, double habit_decay, std::int64_t days_since_enabled,
                            int frauds_suffered = 0, double fraud_aversion = 1.0);

SellChannel choose_sell_channel(const PlayerProfile& profile, const Channels& channels,
                                std::int64_t days_since_black_market_enabled, double habit_decay,
                                RngStream& rng, int frauds_suffered = 0,
                                double fraud_aversion = 1.0);

class Economy {
 public:
  Economy() = default;
  Economy(Catalog catalog, const std::vector<Uid>& uids);

  ev::NpcPurchase npc_buy(Ledger& ledger, const Channels& channels, Uid uid, const ItemId& item,
                          SimTime now);

  ev::ListingCreated market_sell(const Channels& channels, Uid uid, const ItemId& item,
                                 Currency ask_price, SimTime now);
  ev::ListingCancelled market_cancel(Uid uid, ListingId id);
  ev::TradeExecuted market_buy(Ledger& ledger, const Channels& channels, Uid buyer, ListingId id,
                               double tax_rate, SimTime now);

  /// u1 hands `item` to u2. With probability p_fraud u2 keeps it without
  /// paying; otherwise u2 pays `payment` (untaxed, may be 0) to u1.
  ev::InformalTradeExecuted informal_trade(Ledger& ledger, const Channels& channels, Uid u1,
                                           Uid u2, const ItemId& item, Currency payment,
                                           double p_fraud, RngStream& rng, SimTime now);

  /// Cheapest open listing for an item not posted by `exclude` (price, then
  /// listing id as time priority).
  std::optional<ListingId> cheapest_listing(const ItemId& item, std::optional<Uid> exclude) const;
  std::vector<ListingId> open_listings_older_than(std::int64_t step) const;

  void grant(Uid uid, const ItemId& item);
  const Inventory& inventory(Uid uid) const;
  int tradable_count(Uid uid) const;
  std::optional<ItemId> first_tradable(Uid uid) const;

  const Listing& listing(ListingId id) const;
  const std::map<ListingId, Listing>& listings() const { return listings_; }
  std::vector<Listing> open_listings() const;

  Catalog& catalog() { return catalog_; }
  const Catalog& catalog() const { return catalog_; }

  /// Total item count across inventories and escrow.
  std::int64_t items_in_existence() const;
  std::int64_t items_created() const { return items_created_; }

  nlohmann::json to_json() const;
  static Economy from_json(const nlohmann::json& j);

 private:
  void take(Uid uid, const ItemId& item);
  Inventory& inv(Uid uid);

  Catalog catalog_;
  std::map<Uid, Inventory> inventories_;
  std::map<ListingId, Listing> listings_;
  ListingId next_listing_ = 1;
  std::int64_t items_created_ = 0;
};

}  // namespace mmosim
