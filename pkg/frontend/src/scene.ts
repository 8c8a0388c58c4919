/**
 * Engine-side scene graph model.
 *
 * This mirrors what a typical 2D web renderer keeps per display object:
 * a local transform, draw state, and a texture reference by resource
 * URL. The capture shim walks this tree and maps the fields onto the
 * snapshot bundle's scene document; that mapping lives in capture.ts.
 */

export type NodeKind = "container" | "sprite" | "tiling_sprite" | "animated_sprite";

export interface SceneNode {
  id: string;
  kind: NodeKind;
  parent: SceneNode | null;
  children: SceneNode[];
  x: number;
  y: number;
  scaleX: number;
  scaleY: number;
  rotation: number;
  anchorX: number;
  anchorY: number;
  alpha: number;
  visible: boolean;
  zIndex: number;
  /** Resource URL of the texture this node draws; null for containers. */
  textureUrl: string | null;
  /** Sub-rectangle of the texture, [x, y, w, h]; null means the whole texture. */
  frameRect: [number, number, number, number] | null;
  tileOffsetX: number;
  tileOffsetY: number;
  tileScaleX: number;
  tileScaleY: number;
  renderSizeW: number | null;
  renderSizeH: number | null;
  frameIndex: number | null;
  frameCount: number | null;
}

export function makeNode(id: string, kind: NodeKind, init: Partial<SceneNode> = {}): SceneNode {
  return {
    id,
    kind,
    parent: null,
    children: [],
    x: 0,
    y: 0,
    scaleX: 1,
    scaleY: 1,
    rotation: 0,
    anchorX: 0,
    anchorY: 0,
    alpha: 1,
    visible: true,
    zIndex: 0,
    textureUrl: null,
    frameRect: null,
    tileOffsetX: 0,
    tileOffsetY: 0,
    tileScaleX: 1,
    tileScaleY: 1,
    renderSizeW: null,
    renderSizeH: null,
    frameIndex: null,
    frameCount: null,
    ...init,
  };
}

export function appendChild(parent: SceneNode, child: SceneNode): SceneNode {
  child.parent = parent;
  parent.children.push(child);
  return child;
}

/** Pre-order walk over the whole tree, visibility ignored. */
export function walk(root: SceneNode, fn: (node: SceneNode) => void): void {
  fn(root);
  for (const child of root.children) walk(child, fn);
}

/**
 * Drawable nodes in paint order: depth first, siblings by zIndex with
 * ties kept in child order, invisible subtrees pruned, containers
 * ordering their children but not drawn themselves.
 */
export function paintOrder(root: SceneNode): SceneNode[] {
  const out: SceneNode[] = [];
  const visit = (node: SceneNode) => {
    if (!node.visible) return;
    if (node.kind !== "container") out.push(node);
    // slice before sorting: paint order must never reorder the live tree
    const kids = node.children.slice().sort((a, b) => a.zIndex - b.zIndex);
    for (const child of kids) visit(child);
  };
  visit(root);
  return out;
}

export function findNode(root: SceneNode, id: string): SceneNode {
  let found: SceneNode | null = null;
  walk(root, (n) => {
    if (n.id === id) found = n;
  });
  if (found === null) throw new Error(`no node ${id} in scene`);
  return found;
}
