//! Serialization: the BT XML dialect and dataset records.

mod record;
mod xml;

pub use record::{
    check_record, read_record, read_records, write_record, write_records, DatasetRecord, NodeImpl,
    NodeMeta, RecordError, RecordsError,
};
pub use xml::{parse_bt_xml, serialize_bt_xml, XmlError, XmlErrorKind};
