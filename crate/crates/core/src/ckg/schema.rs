use std::fmt;

/// Entity kinds of the conversation knowledge graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityKind {
    User,
    UserTag,
    Item,
    Category,
    Seller,
    Property,
    Value,
    Session,
    Intention,
    Keyword,
}

impl EntityKind {
    pub const ALL: [EntityKind; 10] = [
        EntityKind::User,
        EntityKind::UserTag,
        EntityKind::Item,
        EntityKind::Category,
        EntityKind::Seller,
        EntityKind::Property,
        EntityKind::Value,
        EntityKind::Session,
        EntityKind::Intention,
        EntityKind::Keyword,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::User => "user",
            EntityKind::UserTag => "user_tag",
            EntityKind::Item => "item",
            EntityKind::Category => "category",
            EntityKind::Seller => "seller",
            EntityKind::Property => "property",
            EntityKind::Value => "value",
            EntityKind::Session => "session",
            EntityKind::Intention => "intention",
            EntityKind::Keyword => "keyword",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The nine schema relations. The discriminant is the relation id and the
/// row index into the relation embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Relation {
    UserHasTag = 0,
    ItemBelongsToCategory = 1,
    SellerHasItem = 2,
    ItemHasValue = 3,
    PropertyHasValue = 4,
    UserCreatedSession = 5,
    SessionRelatesToSeller = 6,
    SessionHasIntention = 7,
    IntentionHasKeyword = 8,
}

impl Relation {
    pub const COUNT: usize = 9;

    pub const ALL: [Relation; Relation::COUNT] = [
        Relation::UserHasTag,
        Relation::ItemBelongsToCategory,
        Relation::SellerHasItem,
        Relation::ItemHasValue,
        Relation::PropertyHasValue,
        Relation::UserCreatedSession,
        Relation::SessionRelatesToSeller,
        Relation::SessionHasIntention,
        Relation::IntentionHasKeyword,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::UserHasTag => "user-has-tag",
            Relation::ItemBelongsToCategory => "item-belongs-to-category",
            Relation::SellerHasItem => "seller-has-item",
            Relation::ItemHasValue => "item-has-value",
            Relation::PropertyHasValue => "property-has-value",
            Relation::UserCreatedSession => "user-created-session",
            Relation::SessionRelatesToSeller => "session-relates-to-seller",
            Relation::SessionHasIntention => "session-has-intention",
            Relation::IntentionHasKeyword => "intention-has-keyword",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }

    /// (head kind, tail kind).
    pub fn signature(self) -> (EntityKind, EntityKind) {
        use EntityKind::*;
        match self {
            Relation::UserHasTag => (User, UserTag),
            Relation::ItemBelongsToCategory => (Item, Category),
            Relation::SellerHasItem => (Seller, Item),
            Relation::ItemHasValue => (Item, Value),
            Relation::PropertyHasValue => (Property, Value),
            Relation::UserCreatedSession => (User, Session),
            Relation::SessionRelatesToSeller => (Session, Seller),
            Relation::SessionHasIntention => (Session, Intention),
            Relation::IntentionHasKeyword => (Intention, Keyword),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
