#include "mmosim/economy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mmosim {

using nlohmann::json;

std::string_view to_string(ItemCategory c) {
  switch (c) {
    case ItemCategory::Gear: return "gear";
    case ItemCategory::Consumable: return "consumable";
    case ItemCategory::Loot: return "loot";
  }
  return "?";
}

ItemCategory parse_item_category(std::string_view s) {
  for (auto c : {ItemCategory::Gear, ItemCategory::Consumable, ItemCategory::Loot})
    if (to_string(c) == s) return c;
  throw SimError(ErrorCode::InvalidValue, "unknown item category '" + std::string(s) + "'");
}

std::string_view to_string(ListingStatus s) {
  switch (s) {
    case ListingStatus::Open: return "open";
    case ListingStatus::Filled: return "filled";
    case ListingStatus::Cancelled: return "cancelled";
  }
  return "?";
}

Catalog::Catalog(std::vector<Item> items) : items_(std::move(items)) {
  if (items_.empty()) throw SimError(ErrorCode::InvalidConfig, "empty item catalog");
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].npc_price <= 0)
      throw SimError(ErrorCode::InvalidConfig, "npc_price must be > 0 for " + items_[i].item_id);
    for (std::size_t k = 0; k < i; ++k)
      if (items_[k].item_id == items_[i].item_id)
        throw SimError(ErrorCode::InvalidConfig, "duplicate item " + items_[i].item_id);
  }
}

namespace {
Item item_from_json(const json& r) {
  Item it;
  it.item_id = r.at("item_id").get<std::string>();
  it.name = r.value("name", it.item_id);
  it.category = parse_item_category(r.at("category").get<std::string>());
  it.npc_price = r.at("npc_price").get<Currency>();
  it.tradable = r.value("tradable", true);
  return it;
}
}  // namespace

Catalog Catalog::from_lines(const std::string& text) {
  std::vector<Item> items;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    try {
      items.push_back(item_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw SimError(ErrorCode::InvalidConfig, std::string("catalog record: ") + e.what());
    }
  }
  return Catalog(std::move(items));
}

Catalog Catalog::from_json(const json& array) {
  std::vector<Item> items;
  try {
    for (const auto& r : array) items.push_back(item_from_json(r));
  } catch (const json::exception& e) {
    throw SimError(ErrorCode::InvalidConfig, std::string("catalog record: ") + e.what());
  }
  return Catalog(std::move(items));
}

json Catalog::to_json() const {
  json out = json::array();
  for (const auto& it : items_)
    out.push_back({{"item_id", it.item_id},
                   {"name", it.name},
                   {"category", to_string(it.category)},
                   {"npc_price", it.npc_price},
                   {"tradable", it.tradable}});
  return out;
}

const Item* Catalog::find(const ItemId& id) const {
  for (const auto& it : items_)
    if (it.item_id == id) return &it;
  return nullptr;
}

const Item& Catalog::at(const ItemId& id) const {
  if (const Item* it = find(id)) return *it;
  throw SimError(ErrorCode::UnknownItem, id);
}

void Catalog::set_price(const ItemId& id, Currency price) {
  if (price <= 0) throw SimError(ErrorCode::InvalidValue, "npc_price must be > 0");
  for (auto& it : items_)
    if (it.item_id == id) {
      it.npc_price = price;
      return;
    }
  throw SimError(ErrorCode::UnknownItem, id);
}

Currency Catalog::cheapest_price() const {
  Currency best = items_.front().npc_price;
  for (const auto& it : items_) best = std::min(best, it.npc_price);
  return best;
}

Currency Catalog::cheapest_gear_price() const {
  std::optional<Currency> best;
  for (const auto& it : items_)
    if (it.category == ItemCategory::Gear) best = best ? std::min(*best, it.npc_price) : it.npc_price;
  return best.value_or(cheapest_price());
}

std::vector<ItemId> Catalog::ids_in(ItemCategory c) const {
  std::vector<ItemId> out;
  for (const auto& it : items_)
    if (it.category == c) out.push_back(it.item_id);
  return out;
}

Currency round_half_up_tax(Currency price, double tax_rate) {
  if (tax_rate < 0.0 || tax_rate >= 1.0)
    throw SimError(ErrorCode::InvalidValue, "tax_rate must be in [0,1)");
  const auto ppm = static_cast<Currency>(std::llround(tax_rate * 1'000'000.0));
  return (price * ppm + 500'000) / 1'000'000;
}

double informal_probability(double habit, double habit_decay, std::int64_t days_since_enabled,
                            int frauds_suffered, double fraud_aversion) {
  const auto days = std::max<std::int64_t>(0, days_since_enabled);
  return habit * std::pow(habit_decay, static_cast<double>(days)) *
         std::pow(fraud_aversion, static_cast<double>(std::max(0, frauds_suffered)));
}

SellChannel choose_sell_channel(const PlayerProfile& profile, const Channels& channels,
                                std::int64_t days_since_black_market_enabled, double habit_decay,
                                RngStream& rng, int frauds_suffered, double fraud_aversion) {
  if (!channels.black_market && !channels.informal_trade)
    throw SimError(ErrorCode::NoChannel, "no trade channel enabled");
  if (!channels.black_market) return SellChannel::Informal;
  if (!channels.informal_trade) return SellChannel::BlackMarket;
  const double p = informal_probability(profile.habit_informal_trade, habit_decay,
                                        days_since_black_market_enabled, frauds_suffered,
                                        fraud_aversion);
  return rng.bernoulli(p) ? SellChannel::Informal : SellChannel::BlackMarket;
}

Economy::Economy(Catalog catalog, const std::vector<Uid>& uids) : catalog_(std::move(catalog)) {
  for (Uid u : uids) inventories_[u];
}

Inventory& Economy::inv(Uid uid) {
  auto it = inventories_.find(uid);
  if (it == inventories_.end())
    throw SimError(ErrorCode::InvalidValue, "unknown player " + std::to_string(uid));
  return it->second;
}

const Inventory& Economy::inventory(Uid uid) const {
  return const_cast<Economy*>(this)->inv(uid);
}

void Economy::grant(Uid uid, const ItemId& item) {
  catalog_.at(item);
  ++inv(uid)[item];
  ++items_created_;
}

void Economy::take(Uid uid, const ItemId& item) {
  Inventory& i = inv(uid);
  auto it = i.find(item);
  if (it == i.end() || it->second <= 0)
    throw SimError(ErrorCode::NotOwned, "player " + std::to_string(uid) + " does not own " + item);
  if (--it->second == 0) i.erase(it);
}

int Economy::tradable_count(Uid uid) const {
  int n = 0;
  for (const auto& [id, count] : inventory(uid))
    if (catalog_.at(id).tradable) n += count;
  return n;
}

std::optional<ItemId> Economy::first_tradable(Uid uid) const {
  for (const auto& [id, count] : inventory(uid))
    if (count > 0 && catalog_.at(id).tradable) return id;
  return std::nullopt;
}

ev::NpcPurchase Economy::npc_buy(Ledger& ledger, const Channels& channels, Uid uid,
                                 const ItemId& item, SimTime now) {
  if (!channels.npc_shop) throw SimError(ErrorCode::ChannelDisabled, "npc shop disabled");
  const Item& it = catalog_.at(item);
  inv(uid);
  if (ledger.player_balance(uid) < it.npc_price)
    throw SimError(ErrorCode::InsufficientFunds,
                   "balance " + std::to_string(ledger.player_balance(uid)) + " < price " +
                       std::to_string(it.npc_price));
  ledger.transfer(now, Account::player(uid), Account::reserve(), it.npc_price,
                  TransferKind::NpcPurchase);
  grant(uid, item);
  return ev::NpcPurchase{item, it.npc_price};
}

ev::ListingCreated Economy::market_sell(const Channels& channels, Uid uid, const ItemId& item,
                                        Currency ask_price, SimTime now) {
  if (!channels.black_market) throw SimError(ErrorCode::ChannelDisabled, "black market disabled");
  const Item& it = catalog_.at(item);
  if (!it.tradable) throw SimError(ErrorCode::NotTradable, item);
  if (ask_price <= 0) throw SimError(ErrorCode::InvalidValue, "ask_price must be > 0");
  take(uid, item);
  const ListingId id = next_listing_++;
  listings_.emplace(id, Listing{id, uid, item, ask_price, now.abs_step, ListingStatus::Open, {}});
  return ev::ListingCreated{id, item, ask_price};
}

ev::ListingCancelled Economy::market_cancel(Uid uid, ListingId id) {
  auto it = listings_.find(id);
  if (it == listings_.end() || it->second.status != ListingStatus::Open)
    throw SimError(ErrorCode::ListingClosed, "listing " + std::to_string(id));
  if (it->second.seller != uid) throw SimError(ErrorCode::NotOwned, "listing " + std::to_string(id));
  it->second.status = ListingStatus::Cancelled;
  ++inv(uid)[it->second.item];
  return ev::ListingCancelled{id, it->second.item};
}

ev::TradeExecuted Economy::market_buy(Ledger& ledger, const Channels& channels, Uid buyer,
                                      ListingId id, double tax_rate, SimTime now) {
  if (!channels.black_market) throw SimError(ErrorCode::ChannelDisabled, "black market disabled");
  auto it = listings_.find(id);
  if (it == listings_.end() || it->second.status != ListingStatus::Open)
    throw SimError(ErrorCode::ListingClosed, "listing " + std::to_string(id));
  Listing& l = it->second;
  if (l.seller == buyer) throw SimError(ErrorCode::SelfTrade, "listing " + std::to_string(id));
  inv(buyer);
  if (ledger.player_balance(buyer) < l.ask_price)
    throw SimError(ErrorCode::InsufficientFunds,
                   "balance " + std::to_string(ledger.player_balance(buyer)) + " < ask " +
                       std::to_string(l.ask_price));
  const Currency tax = round_half_up_tax(l.ask_price, tax_rate);
  const Currency proceeds = l.ask_price - tax;
  if (proceeds > 0)
    ledger.transfer(now, Account::player(buyer), Account::player(l.seller), proceeds,
                    TransferKind::MarketTrade);
  if (tax > 0) ledger.transfer(now, Account::player(buyer), Account::burn(), tax, TransferKind::Tax);
  l.status = ListingStatus::Filled;
  l.buyer = buyer;
  ++inv(buyer)[l.item];
  return ev::TradeExecuted{id, buyer, l.seller, l.item, l.ask_price, tax};
}

ev::InformalTradeExecuted Economy::informal_trade(Ledger& ledger, const Channels& channels, Uid u1,
                                                  Uid u2, const ItemId& item, Currency payment,
                                                  double p_fraud, RngStream& rng, SimTime now) {
  if (!channels.informal_trade)
    throw SimError(ErrorCode::ChannelDisabled, "informal trade disabled");
  if (u1 == u2) throw SimError(ErrorCode::SelfTrade, "informal trade with self");
  inv(u2);
  take(u1, item);
  ++inv(u2)[item];
  const bool fraud = rng.bernoulli(p_fraud);
  Currency paid = 0;
  if (!fraud && payment > 0) {
    paid = std::min(payment, ledger.player_balance(u2));
    if (paid > 0)
      ledger.transfer(now, Account::player(u2), Account::player(u1), paid,
                      TransferKind::InformalTrade);
  }
  return ev::InformalTradeExecuted{u1, u2, item, fraud, paid};
}

std::optional<ListingId> Economy::cheapest_listing(const ItemId& item,
                                                   std::optional<Uid> exclude) const {
  std::optional<ListingId> best;
  Currency best_price = 0;
  for (const auto& [id, l] : listings_) {
    if (l.status != ListingStatus::Open || l.item != item) continue;
    if (exclude && l.seller == *exclude) continue;
    if (!best || l.ask_price < best_price) {
      best = id;
      best_price = l.ask_price;
    }
  }
  return best;
}

std::vector<ListingId> Economy::open_listings_older_than(std::int64_t step) const {
  std::vector<ListingId> out;
  for (const auto& [id, l] : listings_)
    if (l.status == ListingStatus::Open && l.created_step < step) out.push_back(id);
  return out;
}

const Listing& Economy::listing(ListingId id) const {
  auto it = listings_.find(id);
  if (it == listings_.end()) throw SimError(ErrorCode::ListingClosed, "no listing " + std::to_string(id));
  return it->second;
}

std::vector<Listing> Economy::open_listings() const {
  std::vector<Listing> out;
  for (const auto& [id, l] : listings_)
    if (l.status == ListingStatus::Open) out.push_back(l);
  return out;
}

std::int64_t Economy::items_in_existence() const {
  std::int64_t n = 0;
  for (const auto& [uid, i] : inventories_)
    for (const auto& [id, c] : i) n += c;
  for (const auto& [id, l] : listings_)
    if (l.status == ListingStatus::Open) ++n;
  return n;
}

json Economy::to_json() const {
  json inv = json::object();
  for (const auto& [uid, i] : inventories_) inv[std::to_string(uid)] = i;
  json ls = json::array();
  for (const auto& [id, l] : listings_) {
    json r{{"listing_id", id},
           {"seller", l.seller},
           {"item", l.item},
           {"ask_price", l.ask_price},
           {"created_step", l.created_step},
           {"status", to_string(l.status)}};
    if (l.buyer) r["buyer"] = *l.buyer;
    ls.push_back(std::move(r));
  }
  return json{{"catalog", catalog_.to_json()},
              {"inventories", inv},
              {"listings", ls},
              {"next_listing", next_listing_},
              {"items_created", items_created_}};
}

Economy Economy::from_json(const json& j) {
  Economy e;
  e.catalog_ = Catalog::from_json(j.at("catalog"));
  for (const auto& [k, v] : j.at("inventories").items())
    e.inventories_[static_cast<Uid>(std::stoul(k))] = v.get<Inventory>();
  for (const auto& r : j.at("listings")) {
    Listing l;
    l.listing_id = r.at("listing_id").get<ListingId>();
    l.seller = r.at("seller").get<Uid>();
    l.item = r.at("item").get<ItemId>();
    l.ask_price = r.at("ask_price").get<Currency>();
    l.created_step = r.at("created_step").get<std::int64_t>();
    const auto st = r.at("status").get<std::string>();
    l.status = st == "open" ? ListingStatus::Open
               : st == "filled" ? ListingStatus::Filled
                                : ListingStatus::Cancelled;
    if (r.contains("buyer")) l.buyer = r.at("buyer").get<Uid>();
    e.listings_.emplace(l.listing_id, std::move(l));
  }
  e.next_listing_ = j.at("next_listing").get<ListingId>();
  e.items_created_ = j.at("items_created").get<std::int64_t>();
  return e;
}

}  // namespace mmosim
