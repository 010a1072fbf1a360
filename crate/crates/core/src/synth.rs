//! A small bundled world: a five-domain toy KG and templated three-turn
//! conversations, split into train, dev and test benchmarks. Test turns
//! carry five paraphrases each.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::corpus::{write_benchmark, Conversation, Turn};
use crate::error::{Error, Result};
use crate::kg::{Fact, Gender, ItemKind, KgItem, KnowledgeGraph, DEFAULT_TYPE_PREDICATE};
use crate::text::tokenize;
use crate::SeededRng;

/// Seed the bundled benchmark files were generated with.
pub const BUNDLE_SEED: u64 = 20_240_501;
pub const PARAPHRASES_PER_TURN: usize = 5;

pub const ITEMS_FILE: &str = "kg_items.jsonl";
pub const FACTS_FILE: &str = "kg_facts.jsonl";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const DEV_FILE: &str = "dev.jsonl";
pub const TEST_FILE: &str = "test.jsonl";

use ItemKind::{Entity, Literal, Predicate, Type};

fn item(id: &str, label: &str, aliases: &[&str], kind: ItemKind, gender: Option<Gender>) -> KgItem {
    KgItem {
        id: id.into(),
        label: label.into(),
        aliases: aliases.iter().map(|a| a.to_string()).collect(),
        kind,
        gender,
    }
}

const M: Option<Gender> = Some(Gender::Male);
const F: Option<Gender> = Some(Gender::Female);

/// (id, label, aliases, wh-word used in templates)
const PREDICATES: &[(&str, &str, &[&str], &str)] = &[
    ("instance_of", "instance of", &[], "what"),
    ("author", "author", &["written by", "writer"], "who"),
    (
        "publication_date",
        "publication date",
        &["published in", "release year"],
        "when",
    ),
    ("award_received", "award received", &["won", "awarded"], "what"),
    ("director", "director", &["directed by", "filmmaker"], "who"),
    ("cast_member", "cast member", &["starring", "cast"], "who"),
    ("character_role", "character role", &["role", "plays"], "which"),
    ("performer", "performer", &["played", "portrayed"], "who"),
    (
        "original_broadcaster",
        "original broadcaster",
        &["airing on", "broadcast by"],
        "what",
    ),
    (
        "production_company",
        "production company",
        &["produced by", "producer"],
        "who",
    ),
    (
        "number_of_seasons",
        "number of seasons",
        &["seasons", "season count"],
        "how many",
    ),
    ("creator", "creator", &["created by", "showrunner"], "who"),
    ("inception", "inception", &["formation year", "founded in"], "when"),
    (
        "location_of_formation",
        "location of formation",
        &["formed in", "origin"],
        "where",
    ),
    ("has_part", "has part", &["band member", "members"], "who"),
    ("place_of_birth", "place of birth", &["born in", "birthplace"], "where"),
    ("home_venue", "home venue", &["home ground", "plays at"], "where"),
    ("head_coach", "head coach", &["coach", "managed by"], "who"),
    ("located_in", "located in", &["based in", "home city"], "where"),
];

const TYPES: &[(&str, &str, &[&str])] = &[
    ("human", "human", &["person", "individual"]),
    ("novel", "novel", &["book"]),
    ("literary_award", "literary award", &["prize", "book award"]),
    ("film", "film", &["movie"]),
    ("fictional_character", "fictional character", &["character"]),
    ("tv_series", "TV series", &["series", "show"]),
    (
        "streaming_service",
        "video streaming service",
        &["network", "streaming service"],
    ),
    ("tv_channel", "television channel", &["channel", "TV channel"]),
    ("company", "company", &["firm", "production house"]),
    ("band", "band", &["music group", "group"]),
    ("city", "city", &["town"]),
    ("soccer_club", "soccer club", &["club", "team", "football club"]),
    ("stadium", "stadium", &["arena", "venue"]),
];

/// (id, label, aliases, gender, type)
type EntityRow = (
    &'static str,
    &'static str,
    &'static [&'static str],
    Option<Gender>,
    &'static str,
);

const ENTITIES: &[EntityRow] = &[
    // books
    (
        "rabbit_is_rich",
        "Rabbit Is Rich",
        &["Rabbit Is Rich novel"],
        None,
        "novel",
    ),
    ("american_pastoral", "American Pastoral", &[], None, "novel"),
    ("dune", "Dune", &["Dune novel"], None, "novel"),
    ("neuromancer", "Neuromancer", &[], None, "novel"),
    ("beloved", "Beloved", &[], None, "novel"),
    ("the_road", "The Road", &["Road novel"], None, "novel"),
    ("wolf_hall", "Wolf Hall", &[], None, "novel"),
    (
        "remains_of_the_day",
        "The Remains of the Day",
        &["Remains"],
        None,
        "novel",
    ),
    (
        "left_hand_of_darkness",
        "The Left Hand of Darkness",
        &["Left Hand"],
        None,
        "novel",
    ),
    ("gilead", "Gilead", &[], None, "novel"),
    ("john_updike", "John Updike", &["Updike"], M, "human"),
    ("philip_roth", "Philip Roth", &["Roth"], M, "human"),
    ("frank_herbert", "Frank Herbert", &["Herbert"], M, "human"),
    ("william_gibson", "William Gibson", &["Gibson"], M, "human"),
    ("toni_morrison", "Toni Morrison", &["Morrison"], F, "human"),
    ("cormac_mccarthy", "Cormac McCarthy", &["McCarthy"], M, "human"),
    ("hilary_mantel", "Hilary Mantel", &["Mantel"], F, "human"),
    ("kazuo_ishiguro", "Kazuo Ishiguro", &["Ishiguro"], M, "human"),
    ("ursula_le_guin", "Ursula Le Guin", &["Le Guin"], F, "human"),
    ("marilynne_robinson", "Marilynne Robinson", &[], F, "human"),
    (
        "pulitzer_fiction",
        "Pulitzer Prize for Fiction",
        &["Pulitzer", "Pulitzer Prize"],
        None,
        "literary_award",
    ),
    ("hugo_award", "Hugo Award", &["Hugo"], None, "literary_award"),
    ("booker_prize", "Booker Prize", &["Booker"], None, "literary_award"),
    ("nebula_award", "Nebula Award", &["Nebula"], None, "literary_award"),
    // movies
    (
        "fellowship_film",
        "The Fellowship of the Ring",
        &["Fellowship", "LOTR"],
        None,
        "film",
    ),
    ("titanic", "Titanic", &["Titanic film"], None, "film"),
    ("the_matrix", "The Matrix", &["Matrix film"], None, "film"),
    ("alien_film", "Alien", &["Alien film"], None, "film"),
    ("pulp_fiction", "Pulp Fiction", &[], None, "film"),
    ("jurassic_park", "Jurassic Park", &[], None, "film"),
    ("casablanca", "Casablanca", &[], None, "film"),
    ("parasite", "Parasite", &["Gisaengchung"], None, "film"),
    ("peter_jackson", "Peter Jackson", &["Jackson"], M, "human"),
    ("james_cameron", "James Cameron", &["Cameron"], M, "human"),
    ("lana_wachowski", "Lana Wachowski", &["Wachowski"], F, "human"),
    ("ridley_scott", "Ridley Scott", &[], M, "human"),
    ("quentin_tarantino", "Quentin Tarantino", &["Tarantino"], M, "human"),
    ("steven_spielberg", "Steven Spielberg", &["Spielberg"], M, "human"),
    ("michael_curtiz", "Michael Curtiz", &["Curtiz"], M, "human"),
    ("bong_joon_ho", "Bong Joon-ho", &["Bong"], M, "human"),
    ("elijah_wood", "Elijah Wood", &[], M, "human"),
    ("leonardo_dicaprio", "Leonardo DiCaprio", &["DiCaprio"], M, "human"),
    ("keanu_reeves", "Keanu Reeves", &["Keanu"], M, "human"),
    ("sigourney_weaver", "Sigourney Weaver", &["Weaver"], F, "human"),
    ("uma_thurman", "Uma Thurman", &["Thurman"], F, "human"),
    ("sam_neill", "Sam Neill", &[], M, "human"),
    ("humphrey_bogart", "Humphrey Bogart", &["Bogart"], M, "human"),
    ("song_kang_ho", "Song Kang-ho", &[], M, "human"),
    ("frodo_baggins", "Frodo Baggins", &["Frodo"], M, "fictional_character"),
    ("jack_dawson", "Jack Dawson", &[], M, "fictional_character"),
    ("neo", "Neo", &["Thomas Anderson"], M, "fictional_character"),
    ("ellen_ripley", "Ellen Ripley", &["Ripley"], F, "fictional_character"),
    ("mia_wallace", "Mia Wallace", &[], F, "fictional_character"),
    ("alan_grant", "Alan Grant", &[], M, "fictional_character"),
    ("rick_blaine", "Rick Blaine", &[], M, "fictional_character"),
    ("kim_ki_taek", "Kim Ki-taek", &[], M, "fictional_character"),
    // tv
    (
        "trop",
        "The Rings of Power",
        &["Rings of Power", "TROP"],
        None,
        "tv_series",
    ),
    ("ozark", "Ozark", &["Ozark series"], None, "tv_series"),
    ("breaking_bad", "Breaking Bad", &["BrBa"], None, "tv_series"),
    ("the_crown", "The Crown", &["Crown series"], None, "tv_series"),
    ("succession", "Succession", &[], None, "tv_series"),
    ("game_of_thrones", "Game of Thrones", &["GoT"], None, "tv_series"),
    ("stranger_things", "Stranger Things", &[], None, "tv_series"),
    ("severance", "Severance", &[], None, "tv_series"),
    (
        "amazon_prime_video",
        "Amazon Prime Video",
        &["Prime Video", "Amazon Prime"],
        None,
        "streaming_service",
    ),
    ("netflix", "Netflix", &[], None, "streaming_service"),
    ("apple_tv", "Apple TV+", &["Apple TV"], None, "streaming_service"),
    ("amc", "AMC", &["AMC network"], None, "tv_channel"),
    ("hbo", "HBO", &["Home Box Office"], None, "tv_channel"),
    (
        "media_rights_capital",
        "Media Rights Capital",
        &["MRC"],
        None,
        "company",
    ),
    ("amazon_studios", "Amazon Studios", &[], None, "company"),
    (
        "left_bank_pictures",
        "Left Bank Pictures",
        &["Left Bank"],
        None,
        "company",
    ),
    (
        "sony_pictures_tv",
        "Sony Pictures Television",
        &["Sony TV"],
        None,
        "company",
    ),
    ("maxim_baldry", "Maxim Baldry", &["Baldry"], M, "human"),
    ("jason_bateman", "Jason Bateman", &["Bateman"], M, "human"),
    ("bryan_cranston", "Bryan Cranston", &["Cranston"], M, "human"),
    ("claire_foy", "Claire Foy", &["Foy"], F, "human"),
    ("brian_cox", "Brian Cox", &[], M, "human"),
    ("emilia_clarke", "Emilia Clarke", &[], F, "human"),
    ("millie_bobby_brown", "Millie Bobby Brown", &[], F, "human"),
    ("adam_scott", "Adam Scott", &[], M, "human"),
    ("vince_gilligan", "Vince Gilligan", &["Gilligan"], M, "human"),
    ("peter_morgan", "Peter Morgan", &[], M, "human"),
    ("jesse_armstrong", "Jesse Armstrong", &[], M, "human"),
    ("david_benioff", "David Benioff", &["Benioff"], M, "human"),
    ("matt_duffer", "Matt Duffer", &["Duffer"], M, "human"),
    ("dan_erickson", "Dan Erickson", &[], M, "human"),
    ("patrick_mckay", "Patrick McKay", &[], M, "human"),
    ("bill_dubuque", "Bill Dubuque", &[], M, "human"),
    ("isildur", "Isildur", &[], M, "fictional_character"),
    ("marty_byrde", "Marty Byrde", &[], M, "fictional_character"),
    (
        "walter_white",
        "Walter White",
        &["Heisenberg"],
        M,
        "fictional_character",
    ),
    ("elizabeth_ii", "Elizabeth II", &[], F, "fictional_character"),
    ("logan_roy", "Logan Roy", &[], M, "fictional_character"),
    (
        "daenerys",
        "Daenerys Targaryen",
        &["Daenerys"],
        F,
        "fictional_character",
    ),
    ("eleven", "Eleven", &[], F, "fictional_character"),
    ("mark_scout", "Mark Scout", &[], M, "fictional_character"),
    // music
    ("u2", "U2", &[], None, "band"),
    ("queen", "Queen", &["Queen band"], None, "band"),
    ("radiohead", "Radiohead", &[], None, "band"),
    ("abba", "ABBA", &[], None, "band"),
    ("coldplay", "Coldplay", &[], None, "band"),
    ("the_beatles", "The Beatles", &["Fab Four"], None, "band"),
    ("nirvana", "Nirvana", &[], None, "band"),
    ("daft_punk", "Daft Punk", &[], None, "band"),
    ("bono", "Bono", &["Paul Hewson"], M, "human"),
    ("freddie_mercury", "Freddie Mercury", &["Mercury"], M, "human"),
    ("thom_yorke", "Thom Yorke", &["Yorke"], M, "human"),
    ("agnetha_faltskog", "Agnetha Faltskog", &["Agnetha"], F, "human"),
    ("chris_martin", "Chris Martin", &[], M, "human"),
    ("john_lennon", "John Lennon", &["Lennon"], M, "human"),
    ("kurt_cobain", "Kurt Cobain", &["Cobain"], M, "human"),
    ("thomas_bangalter", "Thomas Bangalter", &["Bangalter"], M, "human"),
    // soccer
    ("fc_barcelona", "FC Barcelona", &["Barca"], None, "soccer_club"),
    ("real_madrid", "Real Madrid", &["Los Blancos"], None, "soccer_club"),
    (
        "manchester_united",
        "Manchester United",
        &["Man United", "Red Devils"],
        None,
        "soccer_club",
    ),
    ("liverpool_fc", "Liverpool FC", &["the Reds"], None, "soccer_club"),
    ("bayern_munich", "Bayern Munich", &["Bayern"], None, "soccer_club"),
    ("juventus", "Juventus", &["Juve"], None, "soccer_club"),
    (
        "paris_saint_germain",
        "Paris Saint-Germain",
        &["PSG"],
        None,
        "soccer_club",
    ),
    ("ajax", "Ajax", &["Ajax Amsterdam"], None, "soccer_club"),
    ("camp_nou", "Camp Nou", &[], None, "stadium"),
    ("santiago_bernabeu", "Santiago Bernabeu", &["Bernabeu"], None, "stadium"),
    ("old_trafford", "Old Trafford", &[], None, "stadium"),
    ("anfield", "Anfield", &[], None, "stadium"),
    ("allianz_arena", "Allianz Arena", &[], None, "stadium"),
    (
        "allianz_stadium",
        "Allianz Stadium",
        &["Juventus Stadium"],
        None,
        "stadium",
    ),
    ("parc_des_princes", "Parc des Princes", &[], None, "stadium"),
    (
        "johan_cruyff_arena",
        "Johan Cruyff Arena",
        &["Amsterdam Arena"],
        None,
        "stadium",
    ),
    ("hansi_flick", "Hansi Flick", &["Flick"], M, "human"),
    ("carlo_ancelotti", "Carlo Ancelotti", &["Ancelotti"], M, "human"),
    ("ruben_amorim", "Ruben Amorim", &["Amorim"], M, "human"),
    ("arne_slot", "Arne Slot", &[], M, "human"),
    ("vincent_kompany", "Vincent Kompany", &["Kompany"], M, "human"),
    ("thiago_motta", "Thiago Motta", &[], M, "human"),
    ("luis_enrique", "Luis Enrique", &[], M, "human"),
    ("francesco_farioli", "Francesco Farioli", &["Farioli"], M, "human"),
    // places
    ("shillington", "Shillington", &[], None, "city"),
    ("newark", "Newark", &[], None, "city"),
    ("tacoma", "Tacoma", &[], None, "city"),
    ("conway", "Conway", &[], None, "city"),
    ("lorain", "Lorain", &[], None, "city"),
    ("providence", "Providence", &[], None, "city"),
    ("glossop", "Glossop", &[], None, "city"),
    ("nagasaki", "Nagasaki", &[], None, "city"),
    ("berkeley", "Berkeley", &[], None, "city"),
    ("sandpoint", "Sandpoint", &[], None, "city"),
    ("dublin", "Dublin", &[], None, "city"),
    ("london", "London", &[], None, "city"),
    ("abingdon", "Abingdon", &[], None, "city"),
    ("stockholm", "Stockholm", &[], None, "city"),
    ("liverpool", "Liverpool", &[], None, "city"),
    ("aberdeen", "Aberdeen", &[], None, "city"),
    ("paris", "Paris", &[], None, "city"),
    ("zanzibar", "Zanzibar", &[], None, "city"),
    ("wellingborough", "Wellingborough", &[], None, "city"),
    ("jonkoping", "Jonkoping", &[], None, "city"),
    ("exeter", "Exeter", &[], None, "city"),
    ("versailles", "Versailles", &[], None, "city"),
    ("barcelona", "Barcelona", &[], None, "city"),
    ("madrid", "Madrid", &[], None, "city"),
    ("manchester", "Manchester", &[], None, "city"),
    ("munich", "Munich", &[], None, "city"),
    ("turin", "Turin", &[], None, "city"),
    ("amsterdam", "Amsterdam", &[], None, "city"),
];

/// (subject, predicate, object, qualifiers)
type FactRow = (
    &'static str,
    &'static str,
    &'static str,
    &'static [(&'static str, &'static str)],
);

const FACTS: &[FactRow] = &[
    // books
    ("rabbit_is_rich", "author", "john_updike", &[]),
    ("rabbit_is_rich", "publication_date", "y1981", &[]),
    ("rabbit_is_rich", "award_received", "pulitzer_fiction", &[]),
    ("american_pastoral", "author", "philip_roth", &[]),
    ("american_pastoral", "publication_date", "y1997", &[]),
    ("american_pastoral", "award_received", "pulitzer_fiction", &[]),
    ("dune", "author", "frank_herbert", &[]),
    ("dune", "publication_date", "y1965", &[]),
    ("dune", "award_received", "hugo_award", &[]),
    ("neuromancer", "author", "william_gibson", &[]),
    ("neuromancer", "publication_date", "y1984", &[]),
    ("neuromancer", "award_received", "nebula_award", &[]),
    ("beloved", "author", "toni_morrison", &[]),
    ("beloved", "publication_date", "y1987", &[]),
    ("beloved", "award_received", "pulitzer_fiction", &[]),
    ("the_road", "author", "cormac_mccarthy", &[]),
    ("the_road", "publication_date", "y2006", &[]),
    ("the_road", "award_received", "pulitzer_fiction", &[]),
    ("wolf_hall", "author", "hilary_mantel", &[]),
    ("wolf_hall", "publication_date", "y2009", &[]),
    ("wolf_hall", "award_received", "booker_prize", &[]),
    ("remains_of_the_day", "author", "kazuo_ishiguro", &[]),
    ("remains_of_the_day", "publication_date", "y1989", &[]),
    ("remains_of_the_day", "award_received", "booker_prize", &[]),
    ("left_hand_of_darkness", "author", "ursula_le_guin", &[]),
    ("left_hand_of_darkness", "publication_date", "y1969", &[]),
    ("left_hand_of_darkness", "award_received", "hugo_award", &[]),
    ("gilead", "author", "marilynne_robinson", &[]),
    ("gilead", "publication_date", "y2004", &[]),
    ("gilead", "award_received", "pulitzer_fiction", &[]),
    ("john_updike", "place_of_birth", "shillington", &[]),
    ("philip_roth", "place_of_birth", "newark", &[]),
    ("frank_herbert", "place_of_birth", "tacoma", &[]),
    ("william_gibson", "place_of_birth", "conway", &[]),
    ("toni_morrison", "place_of_birth", "lorain", &[]),
    ("cormac_mccarthy", "place_of_birth", "providence", &[]),
    ("hilary_mantel", "place_of_birth", "glossop", &[]),
    ("kazuo_ishiguro", "place_of_birth", "nagasaki", &[]),
    ("ursula_le_guin", "place_of_birth", "berkeley", &[]),
    ("marilynne_robinson", "place_of_birth", "sandpoint", &[]),
    // movies
    ("fellowship_film", "director", "peter_jackson", &[]),
    ("fellowship_film", "publication_date", "y2001", &[]),
    (
        "fellowship_film",
        "cast_member",
        "elijah_wood",
        &[("character_role", "frodo_baggins")],
    ),
    ("titanic", "director", "james_cameron", &[]),
    ("titanic", "publication_date", "y1997", &[]),
    (
        "titanic",
        "cast_member",
        "leonardo_dicaprio",
        &[("character_role", "jack_dawson")],
    ),
    ("the_matrix", "director", "lana_wachowski", &[]),
    ("the_matrix", "publication_date", "y1999", &[]),
    (
        "the_matrix",
        "cast_member",
        "keanu_reeves",
        &[("character_role", "neo")],
    ),
    ("alien_film", "director", "ridley_scott", &[]),
    ("alien_film", "publication_date", "y1979", &[]),
    (
        "alien_film",
        "cast_member",
        "sigourney_weaver",
        &[("character_role", "ellen_ripley")],
    ),
    ("pulp_fiction", "director", "quentin_tarantino", &[]),
    ("pulp_fiction", "publication_date", "y1994", &[]),
    (
        "pulp_fiction",
        "cast_member",
        "uma_thurman",
        &[("character_role", "mia_wallace")],
    ),
    ("jurassic_park", "director", "steven_spielberg", &[]),
    ("jurassic_park", "publication_date", "y1993", &[]),
    (
        "jurassic_park",
        "cast_member",
        "sam_neill",
        &[("character_role", "alan_grant")],
    ),
    ("casablanca", "director", "michael_curtiz", &[]),
    ("casablanca", "publication_date", "y1942", &[]),
    (
        "casablanca",
        "cast_member",
        "humphrey_bogart",
        &[("character_role", "rick_blaine")],
    ),
    ("parasite", "director", "bong_joon_ho", &[]),
    ("parasite", "publication_date", "y2019", &[]),
    (
        "parasite",
        "cast_member",
        "song_kang_ho",
        &[("character_role", "kim_ki_taek")],
    ),
    ("frodo_baggins", "performer", "elijah_wood", &[]),
    ("jack_dawson", "performer", "leonardo_dicaprio", &[]),
    ("neo", "performer", "keanu_reeves", &[]),
    ("ellen_ripley", "performer", "sigourney_weaver", &[]),
    ("mia_wallace", "performer", "uma_thurman", &[]),
    ("alan_grant", "performer", "sam_neill", &[]),
    ("rick_blaine", "performer", "humphrey_bogart", &[]),
    ("kim_ki_taek", "performer", "song_kang_ho", &[]),
    // tv
    ("trop", "original_broadcaster", "amazon_prime_video", &[]),
    ("trop", "cast_member", "maxim_baldry", &[("character_role", "isildur")]),
    ("trop", "number_of_seasons", "n2", &[]),
    ("trop", "production_company", "amazon_studios", &[]),
    ("trop", "creator", "patrick_mckay", &[]),
    ("ozark", "original_broadcaster", "netflix", &[]),
    ("ozark", "production_company", "media_rights_capital", &[]),
    (
        "ozark",
        "cast_member",
        "jason_bateman",
        &[("character_role", "marty_byrde")],
    ),
    ("ozark", "creator", "bill_dubuque", &[]),
    ("ozark", "number_of_seasons", "n4", &[]),
    ("breaking_bad", "original_broadcaster", "amc", &[]),
    ("breaking_bad", "creator", "vince_gilligan", &[]),
    (
        "breaking_bad",
        "cast_member",
        "bryan_cranston",
        &[("character_role", "walter_white")],
    ),
    ("breaking_bad", "number_of_seasons", "n5", &[]),
    ("breaking_bad", "production_company", "sony_pictures_tv", &[]),
    ("the_crown", "original_broadcaster", "netflix", &[]),
    ("the_crown", "creator", "peter_morgan", &[]),
    (
        "the_crown",
        "cast_member",
        "claire_foy",
        &[("character_role", "elizabeth_ii")],
    ),
    ("the_crown", "production_company", "left_bank_pictures", &[]),
    ("the_crown", "number_of_seasons", "n6", &[]),
    ("succession", "original_broadcaster", "hbo", &[]),
    ("succession", "creator", "jesse_armstrong", &[]),
    (
        "succession",
        "cast_member",
        "brian_cox",
        &[("character_role", "logan_roy")],
    ),
    ("succession", "number_of_seasons", "n4", &[]),
    ("game_of_thrones", "original_broadcaster", "hbo", &[]),
    ("game_of_thrones", "creator", "david_benioff", &[]),
    (
        "game_of_thrones",
        "cast_member",
        "emilia_clarke",
        &[("character_role", "daenerys")],
    ),
    ("game_of_thrones", "number_of_seasons", "n8", &[]),
    ("stranger_things", "original_broadcaster", "netflix", &[]),
    ("stranger_things", "creator", "matt_duffer", &[]),
    (
        "stranger_things",
        "cast_member",
        "millie_bobby_brown",
        &[("character_role", "eleven")],
    ),
    ("stranger_things", "number_of_seasons", "n5", &[]),
    ("severance", "original_broadcaster", "apple_tv", &[]),
    ("severance", "creator", "dan_erickson", &[]),
    (
        "severance",
        "cast_member",
        "adam_scott",
        &[("character_role", "mark_scout")],
    ),
    ("severance", "number_of_seasons", "n2", &[]),
    ("isildur", "performer", "maxim_baldry", &[]),
    ("walter_white", "performer", "bryan_cranston", &[]),
    ("daenerys", "performer", "emilia_clarke", &[]),
    ("eleven", "performer", "millie_bobby_brown", &[]),
    // music
    ("u2", "inception", "y1976", &[]),
    ("u2", "location_of_formation", "dublin", &[]),
    ("u2", "has_part", "bono", &[]),
    ("queen", "inception", "y1970", &[]),
    ("queen", "location_of_formation", "london", &[]),
    ("queen", "has_part", "freddie_mercury", &[]),
    ("radiohead", "inception", "y1985", &[]),
    ("radiohead", "location_of_formation", "abingdon", &[]),
    ("radiohead", "has_part", "thom_yorke", &[]),
    ("abba", "inception", "y1972", &[]),
    ("abba", "location_of_formation", "stockholm", &[]),
    ("abba", "has_part", "agnetha_faltskog", &[]),
    ("coldplay", "inception", "y1996", &[]),
    ("coldplay", "location_of_formation", "london", &[]),
    ("coldplay", "has_part", "chris_martin", &[]),
    ("the_beatles", "inception", "y1960", &[]),
    ("the_beatles", "location_of_formation", "liverpool", &[]),
    ("the_beatles", "has_part", "john_lennon", &[]),
    ("nirvana", "inception", "y1987", &[]),
    ("nirvana", "location_of_formation", "aberdeen", &[]),
    ("nirvana", "has_part", "kurt_cobain", &[]),
    ("daft_punk", "inception", "y1993", &[]),
    ("daft_punk", "location_of_formation", "paris", &[]),
    ("daft_punk", "has_part", "thomas_bangalter", &[]),
    ("bono", "place_of_birth", "dublin", &[]),
    ("freddie_mercury", "place_of_birth", "zanzibar", &[]),
    ("thom_yorke", "place_of_birth", "wellingborough", &[]),
    ("agnetha_faltskog", "place_of_birth", "jonkoping", &[]),
    ("chris_martin", "place_of_birth", "exeter", &[]),
    ("john_lennon", "place_of_birth", "liverpool", &[]),
    ("kurt_cobain", "place_of_birth", "aberdeen", &[]),
    ("thomas_bangalter", "place_of_birth", "paris", &[]),
    // soccer
    ("fc_barcelona", "home_venue", "camp_nou", &[]),
    ("fc_barcelona", "head_coach", "hansi_flick", &[]),
    ("fc_barcelona", "inception", "y1899", &[]),
    ("fc_barcelona", "located_in", "barcelona", &[]),
    ("real_madrid", "home_venue", "santiago_bernabeu", &[]),
    ("real_madrid", "head_coach", "carlo_ancelotti", &[]),
    ("real_madrid", "inception", "y1902", &[]),
    ("real_madrid", "located_in", "madrid", &[]),
    ("manchester_united", "home_venue", "old_trafford", &[]),
    ("manchester_united", "head_coach", "ruben_amorim", &[]),
    ("manchester_united", "inception", "y1878", &[]),
    ("manchester_united", "located_in", "manchester", &[]),
    ("liverpool_fc", "home_venue", "anfield", &[]),
    ("liverpool_fc", "head_coach", "arne_slot", &[]),
    ("liverpool_fc", "inception", "y1892", &[]),
    ("liverpool_fc", "located_in", "liverpool", &[]),
    ("bayern_munich", "home_venue", "allianz_arena", &[]),
    ("bayern_munich", "head_coach", "vincent_kompany", &[]),
    ("bayern_munich", "inception", "y1900", &[]),
    ("bayern_munich", "located_in", "munich", &[]),
    ("juventus", "home_venue", "allianz_stadium", &[]),
    ("juventus", "head_coach", "thiago_motta", &[]),
    ("juventus", "inception", "y1897", &[]),
    ("juventus", "located_in", "turin", &[]),
    ("paris_saint_germain", "home_venue", "parc_des_princes", &[]),
    ("paris_saint_germain", "head_coach", "luis_enrique", &[]),
    ("paris_saint_germain", "inception", "y1970", &[]),
    ("paris_saint_germain", "located_in", "paris", &[]),
    ("ajax", "home_venue", "johan_cruyff_arena", &[]),
    ("ajax", "head_coach", "francesco_farioli", &[]),
    ("ajax", "inception", "y1900", &[]),
    ("ajax", "located_in", "amsterdam", &[]),
    ("luis_enrique", "place_of_birth", "barcelona", &[]),
    ("carlo_ancelotti", "place_of_birth", "versailles", &[]),
];

/// Conversation anchors per domain; within a domain the first half goes
/// to train, then a quarter each to dev and test.
const ANCHORS: &[(&str, &[&str])] = &[
    (
        "books",
        &[
            "rabbit_is_rich",
            "dune",
            "beloved",
            "wolf_hall",
            "the_road",
            "left_hand_of_darkness",
            "remains_of_the_day",
            "american_pastoral",
        ],
    ),
    (
        "movies",
        &[
            "fellowship_film",
            "titanic",
            "alien_film",
            "casablanca",
            "the_matrix",
            "pulp_fiction",
            "jurassic_park",
            "parasite",
        ],
    ),
    (
        "tv",
        &[
            "trop",
            "ozark",
            "the_crown",
            "game_of_thrones",
            "breaking_bad",
            "succession",
            "stranger_things",
            "severance",
        ],
    ),
    (
        "music",
        &[
            "u2",
            "queen",
            "radiohead",
            "the_beatles",
            "abba",
            "coldplay",
            "nirvana",
            "daft_punk",
        ],
    ),
    (
        "soccer",
        &[
            "fc_barcelona",
            "real_madrid",
            "manchester_united",
            "bayern_munich",
            "liverpool_fc",
            "juventus",
            "paris_saint_germain",
            "ajax",
        ],
    ),
];

/// Fact objects that are not declared entities become literals.
fn literal_ids() -> Vec<&'static str> {
    let mut ids: Vec<&str> = FACTS
        .iter()
        .map(|f| f.2)
        .filter(|o| !ENTITIES.iter().any(|e| e.0 == *o))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// The bundled toy knowledge graph.
pub fn bundled_kg() -> Result<KnowledgeGraph> {
    let mut items = Vec::new();
    for (id, label, aliases, _) in PREDICATES {
        items.push(item(id, label, aliases, Predicate, None));
    }
    for (id, label, aliases) in TYPES {
        items.push(item(id, label, aliases, Type, None));
    }
    for (id, label, aliases, gender, _) in ENTITIES {
        items.push(item(id, label, aliases, Entity, *gender));
    }
    for id in literal_ids() {
        items.push(item(id, &id[1..], &[], Literal, None));
    }

    let mut facts: Vec<Fact> = ENTITIES
        .iter()
        .map(|(id, _, _, _, ty)| Fact {
            subject: id.to_string(),
            predicate: DEFAULT_TYPE_PREDICATE.into(),
            object: ty.to_string(),
            qualifiers: vec![],
        })
        .collect();
    facts.extend(FACTS.iter().map(|(s, p, o, q)| Fact {
        subject: s.to_string(),
        predicate: p.to_string(),
        object: o.to_string(),
        qualifiers: q.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    }));
    KnowledgeGraph::new(items, facts, DEFAULT_TYPE_PREDICATE)
}

/// One information need: the objects of `predicate` for `subject`, or, for
/// a qualifier predicate, the qualifier values of facts about `subject`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Intent {
    subject: String,
    predicate: String,
    gold: Vec<String>,
}

fn intents_of(kg: &KnowledgeGraph, subject: &str) -> Vec<Intent> {
    let mut out: Vec<Intent> = Vec::new();
    for f in kg.facts_with_subject(subject) {
        if f.predicate == kg.type_predicate() {
            continue;
        }
        match out.iter_mut().find(|i| i.predicate == f.predicate) {
            Some(i) => i.gold.push(f.object.clone()),
            None => out.push(Intent {
                subject: subject.into(),
                predicate: f.predicate.clone(),
                gold: vec![f.object.clone()],
            }),
        }
    }
    out
}

/// An intent about the answer of `prev`, if that answer has facts of its own.
fn chained_intent(kg: &KnowledgeGraph, prev: &Intent) -> Option<Intent> {
    let answer = prev.gold.first()?;
    intents_of(kg, answer).into_iter().next()
}

/// Slots a question template may use.
struct Slots<'a> {
    kg: &'a KnowledgeGraph,
    intent: &'a Intent,
}

impl Slots<'_> {
    fn surfaces(&self, id: &str) -> Vec<String> {
        self.kg
            .get(id)
            .map(|i| i.surfaces().map(str::to_owned).collect())
            .unwrap_or_default()
    }

    fn wh(&self) -> &'static str {
        PREDICATES
            .iter()
            .find(|p| p.0 == self.intent.predicate)
            .map_or("what", |p| p.3)
    }

    fn entity_type(&self) -> Option<&str> {
        self.kg.types_of(&self.intent.subject).ok()?.first().copied()
    }

    fn answer_type(&self) -> Option<&str> {
        let g = self.intent.gold.first()?;
        self.kg.types_of(g).ok()?.first().copied()
    }

    fn pronoun(&self) -> &'static str {
        match self.kg.gender_of(&self.intent.subject) {
            Ok(Some(Gender::Male)) => "he",
            Ok(Some(Gender::Female)) => "she",
            _ => "it",
        }
    }
}

/// Templates whose question names the subject.
const EXPLICIT: &[&str] = &[
    "{W} {R} {E}?",
    "{E} {R}?",
    "{R} of {E}?",
    "{R} of the {ET} {E}?",
    "which {T} {R} {E}?",
    "{W} {R} the {ET} {E}?",
    "which {T} for {E}?",
    "{E} {R} which {T}?",
    "which {T} {R} the {ET} {E}?",
];

/// Templates that leave the subject implicit or refer to it by pronoun.
const FOLLOW_UP: &[&str] = &[
    "{R}?",
    "and the {R}?",
    "{W} {R}?",
    "what about {R}?",
    "{R} of the {ET}?",
    "which {T}?",
    "and {R} of {P}?",
    "{W} {R} {P}?",
    "which {T} {R}?",
    "which {T} {R} the {ET}?",
    "and {R} of the {ET}?",
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Renders a template with randomly chosen surface forms; `None` when a
/// slot it uses is unavailable for the intent.
fn render(template: &str, slots: &Slots, rng: &mut SeededRng) -> Option<String> {
    let mut out = template.to_owned();
    let mut fill = |key: &str, options: Vec<String>, out: &mut String| -> Option<()> {
        if out.contains(key) {
            let choice = options.choose(rng)?.clone();
            *out = out.replace(key, &choice);
        }
        Some(())
    };
    fill("{W}", vec![slots.wh().to_owned()], &mut out)?;
    fill("{R}", slots.surfaces(&slots.intent.predicate), &mut out)?;
    let et = slots.entity_type().map(|t| slots.surfaces(t)).unwrap_or_default();
    fill("{ET}", et, &mut out)?;
    fill("{E}", slots.surfaces(&slots.intent.subject), &mut out)?;
    let at = slots.answer_type().map(|t| slots.surfaces(t)).unwrap_or_default();
    fill("{T}", at, &mut out)?;
    fill("{P}", vec![slots.pronoun().to_owned()], &mut out)?;
    Some(capitalize(&out))
}

fn render_any(templates: &[&str], slots: &Slots, rng: &mut SeededRng) -> String {
    loop {
        let t = templates.choose(rng).expect("templates are non-empty");
        if let Some(q) = render(t, slots, rng) {
            return q;
        }
    }
}

fn paraphrases(first_turn: bool, original: &str, slots: &Slots, rng: &mut SeededRng) -> Result<Vec<Vec<String>>> {
    let mut seen = vec![original.to_lowercase()];
    let mut out = Vec::new();
    for _ in 0..500 {
        if out.len() == PARAPHRASES_PER_TURN {
            return Ok(out);
        }
        let pool = if first_turn || rng.gen_bool(0.5) {
            EXPLICIT
        } else {
            FOLLOW_UP
        };
        let q = render_any(pool, slots, rng);
        if !seen.contains(&q.to_lowercase()) {
            seen.push(q.to_lowercase());
            out.push(tokenize(&q));
        }
    }
    Err(Error::Validation(format!(
        "could not find {PARAPHRASES_PER_TURN} distinct paraphrases for `{original}`"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Split {
    Train,
    Dev,
    Test,
}

fn split_of(position: usize, n: usize) -> Split {
    if position < n / 2 {
        Split::Train
    } else if position < n / 2 + n / 4 {
        Split::Dev
    } else {
        Split::Test
    }
}

/// Two conversations per anchor; the second follows up on an answer
/// entity when one has facts of its own.
fn conversations_for(
    kg: &KnowledgeGraph,
    domain: &str,
    anchor: &str,
    with_paraphrases: bool,
    rng: &mut SeededRng,
) -> Result<Vec<Conversation>> {
    let intents = intents_of(kg, anchor);
    if intents.len() < 3 {
        return Err(Error::Validation(format!(
            "anchor `{anchor}` has fewer than three intents"
        )));
    }
    let mut convs = Vec::new();
    let chainable = |i: &&Intent| chained_intent(kg, i).is_some();
    for variant in 0..2 {
        let plan = if variant == 0 {
            vec![intents[0].clone(), intents[1].clone(), intents[2].clone()]
        } else if let Some(c) = intents.iter().filter(|i| **i != intents[1]).find(chainable) {
            let next = chained_intent(kg, c).expect("chainable");
            vec![intents[1].clone(), c.clone(), next]
        } else {
            vec![intents[1].clone(), intents[2].clone(), intents[0].clone()]
        };

        let mut turns = Vec::new();
        for (i, intent) in plan.iter().enumerate() {
            let slots = Slots { kg, intent };
            let pool = if i == 0 { EXPLICIT } else { FOLLOW_UP };
            let question = render_any(pool, &slots, rng);
            let paraphrases = if with_paraphrases {
                paraphrases(i == 0, &question, &slots, rng)?
            } else {
                vec![]
            };
            turns.push(Turn {
                index: i + 1,
                question: tokenize(&question),
                gold_answers: intent.gold.clone(),
                paraphrases,
            });
        }
        convs.push(Conversation {
            id: format!("{anchor}-{variant}"),
            domain: domain.into(),
            turns,
        });
    }
    Ok(convs)
}

/// The bundled world: KG plus the three benchmark splits.
#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub kg: KnowledgeGraph,
    pub train: Vec<Conversation>,
    pub dev: Vec<Conversation>,
    pub test: Vec<Conversation>,
}

impl SynthWorld {
    pub fn generate(seed: u64) -> Result<Self> {
        let kg = bundled_kg()?;
        let mut rng = SeededRng::seed_from_u64(seed);
        let (mut train, mut dev, mut test) = (vec![], vec![], vec![]);
        for (domain, anchors) in ANCHORS {
            for (pos, anchor) in anchors.iter().enumerate() {
                let split = split_of(pos, anchors.len());
                let convs = conversations_for(&kg, domain, anchor, split == Split::Test, &mut rng)?;
                match split {
                    Split::Train => train.extend(convs),
                    Split::Dev => dev.extend(convs),
                    Split::Test => test.extend(convs),
                }
            }
        }
        Ok(Self { kg, train, dev, test })
    }

    pub fn bundled() -> Result<Self> {
        Self::generate(BUNDLE_SEED)
    }

    /// Writes the KG and the three benchmark files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let items = dir.join(ITEMS_FILE);
        fs::write(&items, self.kg.to_items_jsonl()).map_err(|e| Error::io(&items, e))?;
        let facts = dir.join(FACTS_FILE);
        fs::write(&facts, self.kg.to_facts_jsonl()).map_err(|e| Error::io(&facts, e))?;
        write_benchmark(&dir.join(TRAIN_FILE), &self.train)?;
        write_benchmark(&dir.join(DEV_FILE), &self.dev)?;
        write_benchmark(&dir.join(TEST_FILE), &self.test)
    }
}

/// Directory holding the checked-in copy of the bundled world.
pub fn bundled_data_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{annotate_all, MentionRole};
    use crate::text;

    #[test]
    fn kg_is_consistent_and_unambiguous() {
        let kg = bundled_kg().unwrap();
        let n_facts = kg.facts().len();
        assert!((200..=400).contains(&n_facts), "{n_facts} facts");
        for key in kg.alias_keys() {
            assert_eq!(kg.lookup_key(key).len(), 1, "ambiguous surface `{key}`");
        }
        assert_eq!(kg.aliases_of("trop").unwrap(), ["Rings of Power", "TROP"]);
        assert_eq!(kg.gender_of("john_updike").unwrap(), Some(Gender::Male));
        assert_eq!(kg.types_of("amazon_prime_video").unwrap(), ["streaming_service"]);
        assert!(!kg.is_type("maxim_baldry").unwrap());
    }

    #[test]
    fn split_sizes() {
        let w = SynthWorld::bundled().unwrap();
        assert_eq!((w.train.len(), w.dev.len(), w.test.len()), (40, 20, 20));
        for c in w.train.iter().chain(&w.dev).chain(&w.test) {
            assert_eq!(c.turns.len(), 3);
        }
        for t in w.test.iter().flat_map(|c| &c.turns) {
            assert_eq!(t.paraphrases.len(), PARAPHRASES_PER_TURN);
            assert!(!t.paraphrases.contains(&t.question));
        }
        assert!(w.train.iter().flat_map(|c| &c.turns).all(|t| t.paraphrases.is_empty()));
    }

    #[test]
    fn generation_is_seeded() {
        let a = SynthWorld::generate(5).unwrap();
        let b = SynthWorld::generate(5).unwrap();
        assert_eq!(a.test, b.test);
    }

    #[test]
    fn first_turns_name_their_subject() {
        let w = SynthWorld::bundled().unwrap();
        let all: Vec<Conversation> = w.train.iter().chain(&w.dev).chain(&w.test).cloned().collect();
        for aq in annotate_all(&w.kg, &all).unwrap() {
            if aq.turn_index == 1 {
                assert!(aq.has_role(MentionRole::Entity), "{}", text::detokenize(&aq.question));
            }
        }
    }
}
