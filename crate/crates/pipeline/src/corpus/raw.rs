//! Serde mirrors of the v1.1 user and tweet objects. Only the fields the
//! pipeline reads are declared; everything else is ignored.

use serde::{Deserialize, Serialize};

/// Identifier given either as `id_str` or as a bare numeric `id`.
#[derive(Debug, Default, Deserialize)]
pub struct RawId {
    pub id_str: Option<String>,
    pub id: Option<u64>,
}

impl RawId {
    pub fn resolve(&self) -> Option<String> {
        match (&self.id_str, self.id) {
            (Some(s), _) if !s.trim().is_empty() => Some(s.trim().to_string()),
            (_, Some(n)) => Some(n.to_string()),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct RawUser {
    #[serde(flatten)]
    pub id: RawId,
    pub name: Option<String>,
    pub screen_name: String,
    pub description: Option<String>,
    pub created_at: String,
    pub statuses_count: i64,
    pub followers_count: i64,
    pub friends_count: i64,
    pub favourites_count: i64,
    pub listed_count: i64,
    pub verified: Option<bool>,
    pub protected: Option<bool>,
    pub default_profile: Option<bool>,
    pub profile_use_background_image: Option<bool>,
    pub geo_enabled: Option<bool>,
    pub location: Option<String>,
    pub entities: Option<RawUserEntities>,
}

#[derive(Debug, Default, Deserialize)]
pub struct RawUserEntities {
    pub description: Option<RawEntities>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
pub struct RawEntities {
    #[serde(default)]
    pub urls: Vec<RawUrl>,
    #[serde(default)]
    pub hashtags: Vec<RawTag>,
    #[serde(default)]
    pub user_mentions: Vec<RawMention>,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RawUrl {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expanded_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl RawUrl {
    pub fn resolve(&self) -> Option<String> {
        self.expanded_url.clone().or_else(|| self.url.clone())
    }
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RawTag {
    pub text: String,
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RawMention {
    pub screen_name: String,
}

#[derive(Debug, Deserialize)]
pub struct RawExtended {
    pub full_text: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct RawTweet {
    #[serde(flatten)]
    pub id: RawId,
    pub created_at: String,
    pub text: Option<String>,
    pub full_text: Option<String>,
    pub extended_tweet: Option<RawExtended>,
    pub user: serde_json::Value,
    pub entities: Option<RawEntities>,
    pub retweeted_status: Option<RawRetweeted>,
}

#[derive(Debug, Deserialize)]
pub struct RawRetweeted {
    #[serde(flatten)]
    pub id: RawId,
    pub created_at: Option<String>,
    pub user: Option<RawId>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawMeta {
    pub version: u32,
    pub window_start: Option<String>,
    pub window_end: Option<String>,
    pub reference_date: Option<String>,
}
