// Three.js viewport: the loaded shape, translucent primitive proxies, and a
// transform gizmo. The browser renders only this interactive scene; all
// preview/conditioning imagery is server-rendered for parity with training.

import * as THREE from 'three';
import { OrbitControls } from 'three/examples/jsm/controls/OrbitControls.js';
import { TransformControls } from 'three/examples/jsm/controls/TransformControls.js';
import { parseObjText } from './obj';
import { PrimitiveSpec } from './primitives';

const PROXY_COLOR = 0xae29e6;

export type GizmoMode = 'translate' | 'rotate' | 'scale';

export class Viewport {
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private renderer: THREE.WebGLRenderer;
  private orbit: OrbitControls;
  private gizmo: TransformControls;
  private shapeMesh: THREE.Mesh | null = null;
  private proxies: THREE.Mesh[] = [];
  private raycaster = new THREE.Raycaster();

  /** Called after a gizmo drag ends with the edited primitive list. */
  onEdit: (primitives: PrimitiveSpec[]) => void = () => {};
  onSelect: (index: number) => void = () => {};
  private current: PrimitiveSpec[] = [];
  private currentSelection = -1;
  private loadedObjText: string | null = null;

  constructor(private container: HTMLElement) {
    const w = container.clientWidth || 640;
    const h = container.clientHeight || 480;
    this.camera = new THREE.PerspectiveCamera(45, w / h, 0.01, 100);
    this.camera.position.set(1.6, 1.2, 1.6);
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setSize(w, h);
    this.renderer.setClearColor(0x16181d);
    container.appendChild(this.renderer.domElement);

    this.scene.add(new THREE.HemisphereLight(0xffffff, 0x333344, 1.1));
    const key = new THREE.DirectionalLight(0xffffff, 1.4);
    key.position.set(2, 3, 2);
    this.scene.add(key);
    const grid = new THREE.GridHelper(2, 20, 0x3a3f4a, 0x262a33);
    grid.position.y = -0.55;
    this.scene.add(grid);

    this.orbit = new OrbitControls(this.camera, this.renderer.domElement);
    this.orbit.target.set(0, 0, 0);

    this.gizmo = new TransformControls(this.camera, this.renderer.domElement);
    this.gizmo.addEventListener('dragging-changed', (ev) => {
      this.orbit.enabled = !ev.value;
      if (!ev.value) this.commitGizmoEdit();
    });
    this.scene.add(this.gizmo.getHelper());

    this.renderer.domElement.addEventListener('pointerdown', (ev) => this.pick(ev));
    window.addEventListener('resize', () => this.resize());
    this.animate();
  }

  private animate = () => {
    requestAnimationFrame(this.animate);
    this.orbit.update();
    this.renderer.render(this.scene, this.camera);
  };

  private resize(): void {
    const w = this.container.clientWidth;
    const h = this.container.clientHeight;
    if (!w || !h) return;
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
    this.renderer.setSize(w, h);
  }

  loadObjText(text: string): void {
    if (text === this.loadedObjText) return;
    this.loadedObjText = text;
    if (this.shapeMesh) {
      this.scene.remove(this.shapeMesh);
      this.shapeMesh.geometry.dispose();
    }
    const parsed = parseObjText(text);
    const geom = new THREE.BufferGeometry();
    geom.setAttribute('position', new THREE.BufferAttribute(parsed.positions, 3));
    if (parsed.colors) {
      geom.setAttribute('color', new THREE.BufferAttribute(parsed.colors, 3));
    }
    geom.setIndex(new THREE.BufferAttribute(parsed.indices, 1));
    geom.computeVertexNormals();
    const mat = new THREE.MeshStandardMaterial({
      vertexColors: Boolean(parsed.colors),
      color: parsed.colors ? 0xffffff : 0xb4b4b4,
      roughness: 0.75,
      metalness: 0.05,
      side: THREE.DoubleSide,
    });
    this.shapeMesh = new THREE.Mesh(geom, mat);
    this.scene.add(this.shapeMesh);
  }

  setGizmoMode(mode: GizmoMode): void {
    this.gizmo.setMode(mode);
  }

  /** Rebuild proxies from the list; keeps the gizmo on `selection`.
   *  No-op while a drag is live or when nothing changed (state emits happen
   *  on every keystroke; rebuilding mid-drag would detach the gizmo). */
  setPrimitives(primitives: PrimitiveSpec[], selection: number): void {
    if ((this.gizmo as unknown as { dragging: boolean }).dragging) return;
    const unchanged = selection === this.currentSelection
      && primitives.length === this.current.length
      && primitives.every((p, i) => JSON.stringify(p) === JSON.stringify(this.current[i]));
    if (unchanged && this.proxies.length === primitives.length) return;
    this.currentSelection = selection;
    this.current = primitives.map((p) => ({ ...p }));
    this.gizmo.detach();
    for (const proxy of this.proxies) {
      this.scene.remove(proxy);
      proxy.geometry.dispose();
    }
    this.proxies = primitives.map((p, i) => this.makeProxy(p, i));
    for (const proxy of this.proxies) this.scene.add(proxy);
    if (selection >= 0 && selection < this.proxies.length) {
      this.gizmo.attach(this.proxies[selection]);
    }
  }

  private makeProxy(p: PrimitiveSpec, index: number): THREE.Mesh {
    let geom: THREE.BufferGeometry;
    if (p.kind === 'box') {
      geom = new THREE.BoxGeometry(2, 2, 2);
    } else if (p.kind === 'cylinder') {
      geom = new THREE.CylinderGeometry(1, 1, 2, 32);
    } else {
      geom = new THREE.SphereGeometry(1, 32, 16);
    }
    const mat = new THREE.MeshStandardMaterial({
      color: PROXY_COLOR,
      transparent: true,
      opacity: 0.45,
      depthWrite: false,
    });
    const mesh = new THREE.Mesh(geom, mat);
    mesh.position.set(...p.center);
    mesh.rotation.set(p.rotation[0], p.rotation[1], p.rotation[2], 'XYZ');
    // proxy scale encodes the size triple (cylinder: x=ra, y=half_height, z=rb)
    if (p.kind === 'cylinder') {
      mesh.scale.set(p.size[0], p.size[2], p.size[1]);
    } else {
      mesh.scale.set(p.size[0], p.size[1], p.size[2]);
    }
    mesh.userData.index = index;
    return mesh;
  }

  private commitGizmoEdit(): void {
    const obj = this.gizmo.object as THREE.Mesh | undefined;
    if (!obj) return;
    const index = obj.userData.index as number;
    const next = this.current.map((p) => ({ ...p, center: [...p.center] as [number, number, number], size: [...p.size] as [number, number, number], rotation: [...p.rotation] as [number, number, number] }));
    const p = next[index];
    p.center = [obj.position.x, obj.position.y, obj.position.z];
    p.rotation = [obj.rotation.x, obj.rotation.y, obj.rotation.z];
    const s = obj.scale;
    p.size = p.kind === 'cylinder' ? [s.x, s.z, s.y] : [s.x, s.y, s.z];
    this.onEdit(next);
  }

  private pick(ev: PointerEvent): void {
    if ((this.gizmo as unknown as { dragging: boolean }).dragging) return;
    const rect = this.renderer.domElement.getBoundingClientRect();
    const ndc = new THREE.Vector2(
      ((ev.clientX - rect.left) / rect.width) * 2 - 1,
      -((ev.clientY - rect.top) / rect.height) * 2 + 1,
    );
    this.raycaster.setFromCamera(ndc, this.camera);
    const hits = this.raycaster.intersectObjects(this.proxies, false);
    if (hits.length) {
      this.onSelect(hits[0].object.userData.index as number);
    }
  }
}
