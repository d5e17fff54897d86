// Copyright (c) 2026, pitlab authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pitlab/corpus.hpp"
#include "pitlab/error.hpp"

namespace pitlab {
namespace {

using json = nlohmann::json;

const std::vector<std::string>& first_names() {
  static const std::vector<std::string> v = {
      "Jennifer", "Marcus",  "Elena",   "Tobias",  "Priya",   "Oliver",  "Sofia",
      "Hector",   "Amara",   "Lukas",   "Nadia",   "Felix",   "Ingrid",  "Rafael",
      "Yara",     "Dmitri",  "Clara",   "Anton",   "Leila",   "Victor",  "Mirela",
      "Henrik",   "Ayla",    "Bruno",   "Carmen",  "Dorian",  "Esther",  "Fabian",
      "Greta",    "Hugo",    "Irene",   "Jonas",   "Katya",   "Lionel",  "Maren",
      "Nikolai",  "Odette",  "Pavel",   "Quinn",   "Rosalind", "Stefan", "Tamsin",
      "Ulrich",   "Vera",    "Walter",  "Ximena",  "Yusuf",   "Zora",    "Adrian",
      "Beatrix",  "Cyrus",   "Delia",   "Emil",    "Flora",   "Gideon",  "Helena",
      "Ivor",     "Juliet",  "Kasper",  "Lorena",  "Magnus",  "Noemi",   "Osman",
      "Petra",    "Roland",  "Selma",   "Tristan", "Ursula",  "Valentin", "Wilma",
      "Xavier",   "Yvette",  "Zeno",    "Arlo",    "Bianca",  "Cosmo",   "Dagny",
      "Evander",  "Fiona",   "Gustav"};
  return v;
}

const std::vector<std::string>& last_names() {
  static const std::vector<std::string> v = {
      "Lame",      "Okafor",   "Lindqvist", "Moreau",   "Castellano", "Brandt",
      "Nakamura",  "Oyelaran", "Petrov",    "Quintero", "Rasmussen",  "Sorensen",
      "Takeda",    "Umarov",   "Valdez",    "Whitlock", "Yilmaz",     "Zielinski",
      "Abernathy", "Bergstrom", "Carvalho", "Delacroix", "Eriksen",   "Fairbanks",
      "Galloway",  "Hartmann", "Ivanova",   "Jankowski", "Kowalczyk", "Lancaster",
      "Marchetti", "Novak",    "Osterberg", "Pellegrini", "Ravensworth", "Salazar",
      "Thornbury", "Underhill", "Vasquez",  "Wainwright", "Yamamoto",  "Zamora",
      "Ashcombe",  "Blackwood", "Cordero",  "Dunmore",  "Ellison",    "Falkner",
      "Grimaldi",  "Holloway", "Iverson",   "Jessop",   "Kingsley",   "Lowther",
      "Mendoza",   "Northcott", "Orsini",   "Prescott", "Radcliffe",  "Stanhope",
      "Tremaine",  "Upton",    "Vance",     "Westbrook", "Yardley",   "Zeller",
      "Albright",  "Beaumont", "Crowther",  "Drummond", "Everhart",   "Fenwick",
      "Goodall",   "Hawthorne", "Ingram",   "Jellicoe", "Kensington", "Lockhart",
      "Montague",  "Norwood"};
  return v;
}

const std::vector<std::string>& film_adjectives() {
  static const std::vector<std::string> v = {
      "Silent",   "Crimson", "Hollow",   "Golden",  "Broken",  "Distant", "Frozen",
      "Hidden",   "Burning", "Restless", "Wandering", "Bitter", "Velvet", "Iron",
      "Scarlet",  "Pale",    "Wild",     "Sleeping", "Shattered", "Endless", "Lonely",
      "Northern", "Southern", "Falling", "Rising",  "Quiet",   "Savage",  "Gentle",
      "Midnight", "Electric", "Fading",  "Hungry",  "Sacred",  "Secret",  "Silver",
      "Stolen",   "Twisted", "Violet",   "Wicked",  "Ancient", "Blind",   "Cold",
      "Dark",     "Eternal", "Forgotten", "Glass",  "Heavy",   "Lucky",   "Mad",
      "Neon",     "Paper",   "Rusty",    "Salt",    "Tender",  "Urban",   "Vivid",
      "Winter",   "Amber",   "Bright",   "Copper"};
  return v;
}

const std::vector<std::string>& film_nouns() {
  static const std::vector<std::string> v = {
      "Harbor",   "Horizon", "Kingdom",  "Orchard", "Frontier", "Lantern", "Mirror",
      "Meridian", "Canyon",  "Empire",   "Voyage",  "Garden",  "Summit",   "Tide",
      "Citadel",  "Compass", "Ember",    "Fortress", "Glacier", "Harvest", "Island",
      "Jungle",   "Labyrinth", "Monsoon", "Nebula", "Oasis",   "Pilgrim",  "Quarry",
      "Rampart",  "Sanctuary", "Tempest", "Utopia", "Vortex",  "Wilderness", "Zenith",
      "Anthem",   "Bastion", "Cascade",  "Delta",   "Eclipse", "Fjord",    "Gallows",
      "Haven",    "Inferno", "Journey",  "Keystone", "Legacy", "Mosaic",   "Nomad",
      "Outpost",  "Paradox", "Requiem",  "Serpent", "Threshold", "Undertow", "Vessel",
      "Whisper",  "Arsenal", "Beacon",   "Carnival"};
  return v;
}

const std::vector<std::string>& album_nouns() {
  static const std::vector<std::string> v = {
      "Echoes",   "Dreams",  "Shadows", "Rivers",  "Stars",   "Storms",  "Ashes",
      "Wolves",   "Roses",   "Bells",   "Clouds",  "Flames",  "Waves",   "Ghosts",
      "Lights",   "Mountains", "Oceans", "Petals", "Ruins",   "Seasons", "Thunder",
      "Velvets",  "Wings",   "Skylines", "Sparrows", "Lanterns", "Feathers", "Tides",
      "Embers",   "Crowns",  "Diamonds", "Horses", "Islands", "Kingdoms", "Lullabies",
      "Mirrors",  "Nights",  "Orbits",  "Prayers", "Rains"};
  return v;
}

const std::vector<std::string>& album_tails() {
  static const std::vector<std::string> v = {
      "Dawn",   "Dusk",    "Autumn",  "Silence", "Tomorrow", "Yesterday", "Summer",
      "Memory", "Longing", "Gravity", "Distance", "Wonder",  "Solitude",  "Midsummer",
      "Heaven", "Glory",   "Chaos",   "Mercy",   "Reverie",  "Twilight",  "Devotion",
      "Fortune", "Exile",  "Harmony", "Rapture", "Sorrow",   "Triumph",   "Valor",
      "Whimsy", "Zeal",    "Bliss",   "Courage", "Delight",  "Euphoria",  "Folly",
      "Grace",  "Hope",    "Illusion", "Jubilee", "Karma"};
  return v;
}

const std::vector<std::string>& countries() {
  static const std::vector<std::string> v = {
      "France",   "Japan",    "Brazil",   "Canada",   "Norway",   "Kenya",    "Mexico",
      "Portugal", "Sweden",   "Chile",    "Egypt",    "Finland",  "Greece",   "Hungary",
      "Iceland",  "Ireland",  "Jamaica",  "Latvia",   "Morocco",  "Nepal",    "Oman",
      "Peru",     "Poland",   "Romania",  "Senegal",  "Thailand", "Uruguay",  "Vietnam",
      "Zambia",   "Austria",  "Belgium",  "Colombia", "Denmark",  "Estonia",  "Ghana",
      "Indonesia", "Jordan",  "Lithuania", "Malaysia", "Nigeria"};
  return v;
}

const std::vector<std::string>& cities() {
  static const std::vector<std::string> v = {
      "Lisbon",    "Osaka",     "Toronto",   "Bergen",    "Nairobi",   "Valencia",
      "Montreal",  "Seville",   "Krakow",    "Porto",     "Gothenburg", "Antwerp",
      "Bologna",   "Cordoba",   "Dublin",    "Edinburgh", "Florence",  "Geneva",
      "Hamburg",   "Innsbruck", "Kyoto",     "Leipzig",   "Marseille", "Naples",
      "Oslo",      "Prague",    "Quebec",    "Riga",      "Salzburg",  "Tallinn",
      "Utrecht",   "Vilnius",   "Warsaw",    "Zagreb",    "Aarhus",    "Brno",
      "Cadiz",     "Dresden",   "Eindhoven", "Faro",      "Granada",   "Helsinki",
      "Ibiza",     "Kaunas",    "Lyon",      "Malmo",     "Nantes",    "Odessa",
      "Palermo",   "Rotterdam", "Sofia",     "Turin",     "Uppsala",   "Verona",
      "Wroclaw",   "Zurich",    "Bilbao",    "Chennai",   "Durban",    "Glasgow"};
  return v;
}

const std::vector<std::string>& company_words() {
  static const std::vector<std::string> v = {
      "Paragon",  "Lighthouse", "Bluebird", "Starlight", "Redwood", "Ironclad",
      "Moonrise", "Northstar", "Riverbend", "Sunfield", "Tallgrass", "Wavecrest",
      "Blackfern", "Coldwater", "Driftwood", "Eastgate", "Foxglove", "Greystone",
      "Highland", "Juniper",   "Kestrel",   "Larkspur", "Marigold", "Nightjar",
      "Oakhurst", "Pinecrest", "Quicksilver", "Rosewood", "Stonebridge", "Thistle",
      "Umbra",    "Vantage",   "Whitecap",  "Yellowtail", "Zephyr", "Alder",
      "Briar",    "Cobalt",    "Dunmoor",   "Everglow"};
  return v;
}

const std::vector<std::string>& party_words() {
  static const std::vector<std::string> v = {
      "Liberal", "Progressive", "Reform",  "Unity",   "Civic",    "Green",
      "Labour",  "Democratic",  "Federal", "Popular", "Agrarian", "Republican",
      "Centrist", "Socialist",  "Conservative", "National", "Radical", "Moderate",
      "Pirate",  "Alliance",    "Heritage", "Forward", "Solidarity", "Renewal"};
  return v;
}

const std::vector<std::string>& roles() {
  static const std::vector<std::string> v = {"Governor", "Mayor", "Senator",
                                             "Minister", "Ambassador", "Chancellor"};
  return v;
}

const std::vector<std::string>& months() {
  static const std::vector<std::string> v = {
      "January", "February", "March",     "April",   "May",      "June",
      "July",    "August",   "September", "October", "November", "December"};
  return v;
}

std::vector<std::string> cross(const std::vector<std::string>& a,
                               const std::vector<std::string>& b,
                               const std::string& sep = " ") {
  std::vector<std::string> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(x + sep + y);
  return out;
}

AttributeSchema attr(std::string name, std::string kind, std::string question,
                     std::vector<std::string> titled, std::vector<std::string> elided) {
  return AttributeSchema{std::move(name), std::move(kind), std::move(question),
                         std::move(titled), std::move(elided)};
}

DomainSchema film_schema() {
  DomainSchema s;
  s.domain = "film";
  s.title_kind = "film_title";
  s.intro = "{title} is a film.";
  s.attributes = {
      attr("director", "person", "Who directed {title}?",
           {"{title} was directed by {value}."},
           {"It was directed by {value}.", "Direction was handled by {value}."}),
      attr("editor", "person", "Who handled the editing of {title}?",
           {"{title} was edited by {value}."}, {"Editing was handled by {value}."}),
      attr("composer", "person", "Who composed the music for {title}?",
           {"The music for {title} was composed by {value}."},
           {"The score was composed by {value}.", "{value} composed the score."}),
      attr("cinematographer", "person", "Who was the cinematographer of {title}?",
           {"{title} was shot by cinematographer {value}."},
           {"Cinematography was by {value}."}),
      attr("producer", "person", "Who produced {title}?",
           {"{title} was produced by {value}."}, {"The film was produced by {value}."}),
      attr("writer", "person", "Who wrote the screenplay of {title}?",
           {"The screenplay of {title} was written by {value}."},
           {"The screenplay was written by {value}."}),
      attr("star", "person", "Who starred in {title}?", {"{title} stars {value}."},
           {"It stars {value} in the leading role."}),
      attr("release_date", "date", "When was {title} released?",
           {"{title} was released on {value}."}, {"The film was released on {value}."}),
      attr("country", "country", "Which country produced {title}?",
           {"{title} is a production of {value}."}, {"It was made in {value}."}),
      attr("budget", "money", "What was the budget of {title}?",
           {"{title} had a budget of {value}."}, {"Its budget was {value}."}),
      attr("box_office", "gross", "How much did {title} gross?",
           {"{title} grossed {value} worldwide."}, {"It grossed {value} worldwide."}),
      attr("running_time", "minutes", "What is the running time of {title}?",
           {"{title} runs for {value}."}, {"The running time is {value}."}),
      attr("studio", "studio", "Which studio distributed {title}?",
           {"{title} was distributed by {value}."},
           {"Distribution was handled by {value}."}),
      attr("location", "city", "Where was {title} filmed?",
           {"{title} was filmed in {value}."},
           {"Principal photography took place in {value}."}),
  };
  return s;
}

DomainSchema politics_schema() {
  DomainSchema s;
  s.domain = "politics";
  s.title_kind = "politician";
  s.intro = "{title} is a politician.";
  s.attributes = {
      attr("party", "party", "Which party does {title} belong to?",
           {"{title} is a member of the {value}."}, {"They joined the {value}."}),
      attr("birthplace", "city", "Where was {title} born?",
           {"{title} was born in {value}."}, {"Their birthplace is {value}."}),
      attr("birth_date", "date", "When was {title} born?",
           {"{title} was born on {value}."}, {"Their birthday is {value}."}),
      attr("office", "office", "Which office does {title} hold?",
           {"{title} serves as {value}."}, {"They currently serve as {value}."}),
      attr("spouse", "person", "Who is the spouse of {title}?",
           {"{title} is married to {value}."}, {"They are married to {value}."}),
      attr("education", "university", "Where did {title} study?",
           {"{title} studied at {value}."}, {"They were educated at {value}."}),
      attr("predecessor", "person", "Who preceded {title} in office?",
           {"{title} succeeded {value}."}, {"The previous officeholder was {value}."}),
      attr("term_start", "year", "When did {title} take office?",
           {"{title} took office in {value}."}, {"Their term began in {value}."}),
      attr("country", "country", "Which country does {title} represent?",
           {"{title} represents {value}."}, {"They represent {value}."}),
      attr("advisor", "person", "Who advises {title}?",
           {"{title} is advised by {value}."}, {"Their chief advisor is {value}."}),
  };
  return s;
}

DomainSchema music_schema() {
  DomainSchema s;
  s.domain = "music";
  s.title_kind = "album_title";
  s.intro = "{title} is an album.";
  s.attributes = {
      attr("artist", "person", "Who recorded {title}?",
           {"{title} was recorded by {value}."}, {"It is the work of {value}."}),
      attr("producer", "person", "Who produced {title}?",
           {"{title} was produced by {value}."}, {"Production was handled by {value}."}),
      attr("label", "label", "Which label released {title}?",
           {"{title} was released by {value}."}, {"It was issued through {value}."}),
      attr("release_date", "date", "When was {title} released?",
           {"{title} came out on {value}."}, {"The album came out on {value}."}),
      attr("recording_city", "city", "Where was {title} recorded?",
           {"{title} was recorded in {value}."}, {"Recording took place in {value}."}),
      attr("length", "minutes", "How long is {title}?", {"{title} lasts {value}."},
           {"The total length is {value}."}),
      attr("engineer", "person", "Who engineered {title}?",
           {"{title} was engineered by {value}."}, {"Engineering was done by {value}."}),
      attr("cover_artist", "person", "Who designed the cover of {title}?",
           {"The cover of {title} was designed by {value}."},
           {"The artwork was designed by {value}."}),
      attr("sales", "copies", "How many copies did {title} sell?",
           {"{title} sold {value}."}, {"It sold {value}."}),
      attr("country", "country", "Which country is {title} from?",
           {"{title} comes from {value}."}, {"It originated in {value}."}),
  };
  return s;
}

std::vector<std::string> numbered(int lo, int hi, int step, const std::string& unit) {
  std::vector<std::string> out;
  for (int n = lo; n <= hi; n += step) out.push_back(std::to_string(n) + " " + unit);
  return out;
}

std::vector<std::string> get_strings(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& s : j.at(key)) out.push_back(s.get<std::string>());
  return out;
}

}  // namespace

std::vector<std::string> value_space(std::string_view kind) {
  if (kind == "person") return cross(first_names(), last_names());
  if (kind == "date") {
    std::vector<std::string> out;
    for (int year = 1960; year <= 2022; ++year)
      for (const auto& m : months())
        for (int day = 1; day <= 28; day += 3)
          out.push_back(m + " " + std::to_string(day) + ", " + std::to_string(year));
    return out;
  }
  if (kind == "year") {
    std::vector<std::string> out;
    for (int y = 1950; y <= 2022; ++y) out.push_back(std::to_string(y));
    return out;
  }
  if (kind == "country") return countries();
  if (kind == "city") return cities();
  if (kind == "money") return numbered(10, 250, 5, "million dollars");
  if (kind == "gross") return numbered(20, 900, 10, "million dollars");
  if (kind == "minutes") return numbered(80, 200, 1, "minutes");
  if (kind == "copies") return numbered(100, 990, 10, "thousand copies");
  if (kind == "studio") {
    auto a = cross(company_words(), {"Pictures"});
    auto b = cross(company_words(), {"Studios"});
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  if (kind == "label") return cross(company_words(), {"Records"});
  if (kind == "party") return cross(party_words(), {"Party"});
  if (kind == "office") return cross(roles(), cities(), " of ");
  if (kind == "university") {
    auto a = cross({"University of"}, cities());
    auto b = cross(last_names(), {"College"});
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }
  fail(ErrorKind::usage, "unknown value kind '" + std::string(kind) + "'");
}

std::vector<std::string> title_space(std::string_view kind) {
  if (kind == "film_title") return cross(film_adjectives(), film_nouns());
  if (kind == "album_title") return cross(album_nouns(), album_tails(), " of ");
  if (kind == "politician") return cross(first_names(), last_names());
  fail(ErrorKind::usage, "unknown title kind '" + std::string(kind) + "'");
}

std::vector<DomainSchema> builtin_schemas() {
  return {film_schema(), politics_schema(), music_schema()};
}

std::vector<DomainSchema> load_schemas(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open schema file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "schema file " + path.string() + ": " + e.what());
  }
  if (!j.is_array()) fail(ErrorKind::data, "schema file must hold a JSON array of domains");
  std::vector<DomainSchema> out;
  try {
    for (const auto& d : j) {
      DomainSchema s;
      s.domain = d.at("domain").get<std::string>();
      s.title_kind = d.at("title_kind").get<std::string>();
      s.intro = d.at("intro").get<std::string>();
      for (const auto& a : d.at("attributes")) {
        AttributeSchema as;
        as.name = a.at("name").get<std::string>();
        as.value_kind = a.at("value_kind").get<std::string>();
        as.question = a.at("question").get<std::string>();
        as.titled = get_strings(a, "titled");
        as.elided = get_strings(a, "elided");
        if (as.titled.empty() || as.elided.empty())
          fail(ErrorKind::data, "attribute '" + as.name + "' needs titled and elided templates");
        value_space(as.value_kind);  // validates the kind
        s.attributes.push_back(std::move(as));
      }
      if (s.attributes.empty())
        fail(ErrorKind::data, "domain '" + s.domain + "' has no attributes");
      title_space(s.title_kind);
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::data, "schema file " + path.string() + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::data, "schema file " + path.string() + ": " + e.what());
  }
  if (out.empty()) fail(ErrorKind::data, "schema file " + path.string() + " is empty");
  return out;
}

}  // namespace pitlab
